//! Power-law fit of `G₀(0, x)` at large `|x|`.

use serde::Serialize;

use super::green::{green_function, green_zero_time_domain, is_transient};
use super::jump::JumpKernel;
use super::torus::TorusGrid;
use crate::error::{Error, Result};
use crate::numerics::fit_line;

/// Largest RMS residual (in log units) accepted from the fit.
pub const FIT_RESIDUAL_TOL: f64 = 0.1;

#[derive(Debug, Clone, Serialize)]
pub struct GreenAsymptoteFit {
    /// Slope of `log G₀` against `log |x|`; close to `-(d-2)`.
    pub exponent: f64,
    /// `exp(intercept)`.
    pub constant: f64,
    pub radii: Vec<f64>,
    pub residual: f64,
    /// `(|x|, G₀(0, x))` for every point in the fit.
    pub samples: Vec<(f64, f64)>,
}

/// Sample points for radius `r`: the axis point `r e₁` and the planar
/// diagonal point nearest to `|x| = r`.
fn points_near(d: usize, r: f64) -> Vec<Vec<i64>> {
    let mut axis = vec![0; d];
    axis[0] = r.round() as i64;
    let mut diag = vec![0; d];
    let c = (r / std::f64::consts::SQRT_2).round() as i64;
    diag[0] = c;
    diag[1] = c;
    vec![axis, diag]
}

/// Least-squares fit of `log G₀(0, x)` against `log |x|` (Euclidean norm).
///
/// Axis-separable kernels use the time-domain route, which has no torus
/// image error at large `|x|`; other kernels use the extrapolated torus sum
/// on `grid`, which must then be much wider than the largest radius.
pub fn green_asymptote_fit(
    kernel: &JumpKernel,
    grid: &TorusGrid,
    radii: &[f64],
) -> Result<GreenAsymptoteFit> {
    let d = kernel.dimension();
    if !is_transient(kernel) {
        return Err(Error::DivergentGreen { dimension: d });
    }
    if radii.len() < 4 {
        return Err(Error::FitUnstable(format!(
            "need at least 4 radii, got {}",
            radii.len()
        )));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] < 1.0 {
        return Err(Error::FitUnstable(
            "radii must be strictly increasing and at least 1".into(),
        ));
    }
    if radii[radii.len() - 1] / radii[0] < 4.0 {
        return Err(Error::FitUnstable(
            "radius range must span a factor of at least 4".into(),
        ));
    }
    let separable = kernel.axis_factors().is_some();
    let origin = vec![0; d];
    let mut samples = Vec::new();
    for &r in radii {
        for x in points_near(d, r) {
            let g = if separable {
                green_zero_time_domain(kernel, &x)?.value
            } else {
                green_function(kernel, grid, 0.0, &origin, &x)?.value
            };
            if !(g > 0.0) {
                return Err(Error::FitUnstable(format!(
                    "nonpositive Green value at {x:?}"
                )));
            }
            let norm = x.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
            samples.push((norm, g));
        }
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let (slope, intercept, residual) = fit_line(&xs, &ys);
    if !(residual <= FIT_RESIDUAL_TOL) {
        return Err(Error::FitUnstable(format!(
            "log-log residual {residual:.3} exceeds tolerance"
        )));
    }
    Ok(GreenAsymptoteFit {
        exponent: slope,
        constant: intercept.exp(),
        radii: radii.to_vec(),
        residual,
        samples,
    })
}
