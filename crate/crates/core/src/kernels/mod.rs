//! Random-walk kernels: heat kernel, Green function, resolvent integral.

mod asymptote;
mod green;
mod heat;
mod jump;
mod torus;
mod transience;

pub use asymptote::{green_asymptote_fit, GreenAsymptoteFit, FIT_RESIDUAL_TOL};
pub use green::{
    green_function, green_time_domain, green_zero_time_domain, is_transient, resolvent_integral,
};
pub use heat::{transition_field, transition_probability};
pub use jump::{spans_lattice, AxisKernel, Jump, JumpKernel, Point};
pub use torus::{midpoint_sum, QuadratureMode, TorusField, TorusGrid};
pub use transience::{transience_check, TransienceReport, Verdict};
