//! First and higher factorial moments of the particle field on finite boxes.

mod bounds;
mod hierarchy;
mod kpp;
mod lattice_box;
mod ode;

pub use bounds::{
    carleman_profile, catalan_d, majorization_check, moment_bound_check, BoundReport, DlSequence,
    MajorizationReport,
};
pub use hierarchy::{
    default_dt, solve_factorial_moments, solve_first_moment, FirstMoment, InitialData,
    MomentOptions, MomentTable,
};
pub use kpp::{kpp_factorial_moments, kpp_generating_function, GeneratingFunction, KppMoments};
pub use lattice_box::{Boundary, LatticeBox, SparseGenerator};
