//! Heat kernel `p(t, x, y)` of the continuous-time random walk.

use super::jump::{AxisKernel, JumpKernel};
use super::torus::{midpoint_sum, TorusField, TorusGrid};
use crate::error::{Error, Result};
use crate::numerics::Estimate;

/// `p(t, x, y) = (2π)^{-d} ∫ e^{-t(1-â(k))} e^{-ik(y-x)} dk` by midpoint quadrature.
///
/// The estimated error is the change against the `N/2` grid. The value is
/// clamped to `[0, 1]`; quadrature noise far in the tails can otherwise
/// produce tiny negatives.
pub fn transition_probability(
    kernel: &JumpKernel,
    grid: &TorusGrid,
    t: f64,
    x: &[i64],
    y: &[i64],
) -> Result<Estimate> {
    check_time(t)?;
    let disp = displacement(kernel, x, y)?;
    if t == 0.0 {
        let delta = if disp.iter().all(|&c| c == 0) {
            1.0
        } else {
            0.0
        };
        return Ok(Estimate::exact(delta));
    }
    let f = |a: f64| (-t * (1.0 - a)).exp();
    let fine = midpoint_sum(kernel, grid.points_per_axis, &disp, f);
    let est_error = match grid.coarsened() {
        Some(c) => (fine - midpoint_sum(kernel, c.points_per_axis, &disp, f)).abs(),
        None => f64::NAN,
    };
    Ok(Estimate {
        value: fine.clamp(0.0, 1.0),
        est_error,
    })
}

/// `p(t, 0, x)` for every `x` with `|x_a| < N/2`, from one inverse FFT.
/// Values are not clamped.
pub fn transition_field(kernel: &JumpKernel, grid: &TorusGrid, t: f64) -> Result<TorusField> {
    check_time(t)?;
    Ok(TorusField::compute(kernel, grid.points_per_axis, |a| {
        (-t * (1.0 - a)).exp()
    }))
}

/// One-dimensional heat kernel of an axis factor with total rate `w`:
/// `(2π)^{-1} ∫ e^{-t(w - â(k))} cos(nk) dk`.
///
/// The node count grows with the spread of the walk so the image error
/// stays below double precision.
pub(crate) fn axis_heat_kernel(axis: &AxisKernel, t: f64, n: i64) -> f64 {
    let w = axis.total_rate();
    if t == 0.0 || w == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let spread = 12.0 * (axis.variance_rate() * t).sqrt() + 12.0 * axis.range() as f64 + 40.0;
    let m = (2.0 * (n.unsigned_abs() as f64 + spread)).ceil() as usize;
    let m = m + m % 2;
    let h = 2.0 * std::f64::consts::PI / m as f64;
    let nf = n as f64;
    let mut acc = 0.0;
    for j in 0..m {
        let k = -std::f64::consts::PI + (j as f64 + 0.5) * h;
        acc += (-t * (w - axis.symbol(k))).exp() * (nf * k).cos();
    }
    acc / m as f64
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "time must be finite and nonnegative, got {t}"
        )));
    }
    Ok(())
}

pub(crate) fn displacement(kernel: &JumpKernel, x: &[i64], y: &[i64]) -> Result<Vec<i64>> {
    let d = kernel.dimension();
    if x.len() != d || y.len() != d {
        return Err(Error::InvalidInput(format!(
            "points must have dimension {d}"
        )));
    }
    Ok(y.iter().zip(x).map(|(b, a)| b - a).collect())
}
