//! Numerical laboratory for critical branching random walks on `Z^d` with
//! local perturbations of the branching rate.

pub mod error;
pub mod kernels;
pub mod moments;
pub mod numerics;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};
