//! Transience diagnostics: the dimension rule cross-checked against the
//! refinement trend of plain midpoint estimates of `I(0)`.

use serde::Serialize;

use super::green::is_transient;
use super::jump::JumpKernel;
use super::torus::midpoint_sum;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Transient,
    Recurrent,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransienceReport {
    pub verdict: Verdict,
    pub points_per_axis: Vec<usize>,
    /// Plain midpoint `I(0)` per grid.
    pub estimates: Vec<f64>,
    /// Ratio of the last two increments between successive grids.
    pub increment_ratio: f64,
}

/// Increments shrinking at least this fast count as converging.
const CONVERGING: f64 = 0.75;
/// Increments shrinking slower than this (or growing) count as diverging.
const DIVERGING: f64 = 0.9;

/// Each grid should double the previous one. For a transient walk the
/// midpoint error decays like `N^{-(d-2)}` so successive increments shrink
/// by at least half; for recurrent walks they stay constant (`d = 2`) or
/// grow (`d = 1`).
pub fn transience_check(
    kernel: &JumpKernel,
    points_per_axis: &[usize],
) -> Result<TransienceReport> {
    if points_per_axis.len() < 3 {
        return Err(Error::InvalidInput(
            "transience check needs at least three grids".into(),
        ));
    }
    if points_per_axis.iter().any(|&n| n < 4 || n % 2 != 0)
        || points_per_axis.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::InvalidInput(
            "grids must be even and strictly increasing".into(),
        ));
    }
    let origin = vec![0; kernel.dimension()];
    let estimates: Vec<f64> = points_per_axis
        .iter()
        .map(|&n| midpoint_sum(kernel, n, &origin, |a| 1.0 / (1.0 - a)))
        .collect();
    let k = estimates.len();
    let last = estimates[k - 1] - estimates[k - 2];
    let prev = estimates[k - 2] - estimates[k - 3];
    let increment_ratio = last / prev;

    let verdict = if is_transient(kernel) {
        Verdict::Transient
    } else {
        Verdict::Recurrent
    };
    let consistent = match verdict {
        Verdict::Transient => increment_ratio.abs() < CONVERGING,
        Verdict::Recurrent => increment_ratio > DIVERGING,
    };
    if !consistent {
        return Err(Error::InconsistentDiagnostic(format!(
            "dimension rule says {verdict:?} but increment ratio is {increment_ratio:.4}"
        )));
    }
    Ok(TransienceReport {
        verdict,
        points_per_axis: points_per_axis.to_vec(),
        estimates,
        increment_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dichotomy_by_dimension() {
        let grids = [16, 32, 64];
        let r = transience_check(&JumpKernel::named("srw-d3").unwrap(), &grids).unwrap();
        assert_eq!(r.verdict, Verdict::Transient);
        assert!((r.estimates[2] - 1.5164).abs() < 0.03);
        let r = transience_check(&JumpKernel::named("srw-d1").unwrap(), &grids).unwrap();
        assert_eq!(r.verdict, Verdict::Recurrent);
        // grows roughly like N
        assert!(r.increment_ratio > 1.8);
        let r = transience_check(&JumpKernel::named("srw-d2").unwrap(), &grids).unwrap();
        assert_eq!(r.verdict, Verdict::Recurrent);
    }

    #[test]
    fn rejects_short_sequences() {
        let k = JumpKernel::named("srw-d3").unwrap();
        assert!(transience_check(&k, &[16, 32]).is_err());
        assert!(transience_check(&k, &[32, 16, 64]).is_err());
    }
}
