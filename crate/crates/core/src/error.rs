use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid jump kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The Green function at zero spectral parameter is infinite because the walk is recurrent.
    #[error("Green function diverges at lambda = 0 for a recurrent walk (dimension {dimension})")]
    DivergentGreen { dimension: usize },

    #[error("Green asymptote fit unstable: {0}")]
    FitUnstable(String),

    #[error("transience diagnostic disagrees with the dimension rule: {0}")]
    InconsistentDiagnostic(String),

    #[error("source strength {sigma_total} is not below the critical threshold {sigma_star}")]
    SupercriticalInput { sigma_total: f64, sigma_star: f64 },

    #[error(
        "no positive root of sigma * I(lambda) = 1 for sigma = {sigma} (threshold {sigma_star})"
    )]
    NoRoot { sigma: f64, sigma_star: f64 },

    #[error(
        "power iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("source at {site:?} lies outside the lattice box")]
    SourceOutsideBox { site: Vec<i64> },

    #[error("unstable time step: {0}")]
    UnstableStep(String),

    #[error("generating function left [0, 1]: value {value} at site index {site}")]
    RangeViolation { value: f64, site: usize },
}
