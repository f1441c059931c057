//! Criticality threshold, steady first-moment constants, and the growth
//! eigenvalue of `L_a + V`.

mod eigen;
mod field;

use serde::Serialize;

pub use eigen::{box_principal_eigenvalue, BoxEigen};
pub use field::{PerturbationField, Source};

use crate::error::{Error, Result};
use crate::kernels::{green_time_domain, is_transient, resolvent_integral, JumpKernel, TorusGrid};
use crate::numerics::Estimate;

/// Residual tolerance `|σ I(λ) − 1|` for the growth eigenvalue.
pub const ROOT_TOL: f64 = 1e-10;
const MAX_DOUBLINGS: usize = 64;
const MAX_BISECTIONS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

/// `G₀(0, 0)` for a transient walk.
pub fn green_at_origin(kernel: &JumpKernel, grid: &TorusGrid) -> Result<Estimate> {
    if !is_transient(kernel) {
        return Err(Error::DivergentGreen {
            dimension: kernel.dimension(),
        });
    }
    resolvent_integral(kernel, grid, 0.0)
}

/// `σ* = 1 / G₀(0, 0)`.
pub fn critical_threshold(kernel: &JumpKernel, grid: &TorusGrid) -> Result<Estimate> {
    let g = green_at_origin(kernel, grid)?;
    Ok(Estimate {
        value: 1.0 / g.value,
        est_error: g.est_error / (g.value * g.value),
    })
}

/// `1 / (1 − σ_tot G₀(0, 0))`: the constant `A` for one source, `C` for several.
pub fn steady_mean_constant(
    kernel: &JumpKernel,
    grid: &TorusGrid,
    field: &PerturbationField,
) -> Result<f64> {
    let g0 = green_at_origin(kernel, grid)?.value;
    steady_constant_from(g0, field.sigma_total())
}

fn steady_constant_from(g0: f64, sigma_total: f64) -> Result<f64> {
    let sigma_star = 1.0 / g0;
    if sigma_total >= sigma_star {
        return Err(Error::SupercriticalInput {
            sigma_total,
            sigma_star,
        });
    }
    Ok(1.0 / (1.0 - sigma_total * g0))
}

/// `B = 2(μ + σ_tot) G₀(0, 0)`.
pub fn bound_constant_b(
    kernel: &JumpKernel,
    grid: &TorusGrid,
    field: &PerturbationField,
) -> Result<f64> {
    let g0 = green_at_origin(kernel, grid)?.value;
    Ok(2.0 * (field.mu() + field.sigma_total()) * g0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthRoot {
    pub lambda: f64,
    /// `|σ I(λ) − 1|` at the returned root.
    pub residual: f64,
    /// Set when `σ = σ*`: the root sits at `λ = 0`.
    pub boundary: bool,
}

/// Resolvent used for the eigenvalue equation: the time-domain integral for
/// axis-separable kernels (accurate uniformly in `λ`), the torus quadrature
/// otherwise.
pub fn resolvent_for_root(kernel: &JumpKernel, grid: &TorusGrid, lambda: f64) -> Result<f64> {
    if kernel.axis_factors().is_some() {
        Ok(green_time_domain(kernel, lambda, &vec![0; kernel.dimension()])?.value)
    } else {
        Ok(resolvent_integral(kernel, grid, lambda)?.value)
    }
}

/// The `λ > 0` solving `σ I(λ) = 1`, by bisection.
pub fn growth_eigenvalue(kernel: &JumpKernel, grid: &TorusGrid, sigma: f64) -> Result<GrowthRoot> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let resolvent = |lambda: f64| resolvent_for_root(kernel, grid, lambda);
    if is_transient(kernel) {
        let i0 = resolvent(0.0)?;
        let sigma_star = 1.0 / i0;
        let residual = (sigma * i0 - 1.0).abs();
        if residual <= ROOT_TOL {
            return Ok(GrowthRoot {
                lambda: 0.0,
                residual,
                boundary: true,
            });
        }
        if sigma < sigma_star {
            return Err(Error::NoRoot { sigma, sigma_star });
        }
    }
    // I(λ) ≤ 1/λ, so σ I(σ) ≤ 1 and λ = σ brackets the root from above
    let mut hi = sigma;
    let mut doublings = 0;
    while sigma * resolvent(hi)? > 1.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::NoConvergence {
                iterations: doublings,
                residual: f64::NAN,
            });
        }
    }
    let mut lo = 0.0;
    let mut best = (hi, (sigma * resolvent(hi)? - 1.0).abs());
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = sigma * resolvent(mid)? - 1.0;
        if f.abs() < best.1 {
            best = (mid, f.abs());
        }
        if f.abs() <= ROOT_TOL {
            return Ok(GrowthRoot {
                lambda: mid,
                residual: f.abs(),
                boundary: false,
            });
        }
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_BISECTIONS,
        residual: best.1,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    /// `0` for recurrent walks.
    pub sigma_star: f64,
    pub recurrent: bool,
    pub sigma_total: f64,
    pub regime: Regime,
    pub growth_eigenvalue: Option<GrowthRoot>,
    /// `A` (or `C`), finite only below the threshold.
    pub steady_constant: Option<f64>,
    /// Undefined for recurrent walks.
    pub bound_b: Option<f64>,
    pub green_origin: Option<Estimate>,
}

/// Everything the threshold analysis knows about `field`.
pub fn spectral_report(
    kernel: &JumpKernel,
    grid: &TorusGrid,
    field: &PerturbationField,
) -> Result<SpectralReport> {
    field.check_dimension(kernel.dimension())?;
    let sigma_total = field.sigma_total();
    if !is_transient(kernel) {
        let growth = if sigma_total > 0.0 {
            Some(growth_eigenvalue(kernel, grid, sigma_total)?)
        } else {
            None
        };
        let regime = if sigma_total > 0.0 {
            Regime::Supercritical
        } else {
            Regime::Critical
        };
        return Ok(SpectralReport {
            sigma_star: 0.0,
            recurrent: true,
            sigma_total,
            regime,
            growth_eigenvalue: growth,
            steady_constant: None,
            bound_b: None,
            green_origin: None,
        });
    }
    let g0 = green_at_origin(kernel, grid)?;
    let sigma_star = 1.0 / g0.value;
    let bound_b = Some(2.0 * (field.mu() + sigma_total) * g0.value);
    let (regime, growth, steady) = if sigma_total < sigma_star {
        (
            Regime::Subcritical,
            None,
            Some(steady_constant_from(g0.value, sigma_total)?),
        )
    } else if sigma_total == sigma_star {
        (Regime::Critical, None, None)
    } else {
        let root = growth_eigenvalue(kernel, grid, sigma_total)?;
        if root.boundary {
            (Regime::Critical, None, None)
        } else {
            (Regime::Supercritical, Some(root), None)
        }
    };
    Ok(SpectralReport {
        sigma_star,
        recurrent: false,
        sigma_total,
        regime,
        growth_eigenvalue: growth,
        steady_constant: steady,
        bound_b,
        green_origin: Some(g0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const WATSON: f64 = 1.516_386_059_151_978;

    fn d3() -> (JumpKernel, TorusGrid) {
        (
            JumpKernel::named("srw-d3").unwrap(),
            TorusGrid::default_for(3),
        )
    }

    #[test]
    fn threshold_and_constants() {
        let (k, g) = d3();
        let s = critical_threshold(&k, &g).unwrap().value;
        assert!((s - 1.0 / WATSON).abs() < 2e-4);
        let f = PerturbationField::single(3, 1.0, 0.3).unwrap();
        let a = steady_mean_constant(&k, &g, &f).unwrap();
        assert!((a - 1.0 / (1.0 - 0.3 * WATSON)).abs() < 1e-3);
        let b = bound_constant_b(&k, &g, &f).unwrap();
        assert!((b - 2.6 * WATSON).abs() < 1e-3);
        let f = PerturbationField::single(3, 1.0, 0.7).unwrap();
        assert!(matches!(
            steady_mean_constant(&k, &g, &f),
            Err(Error::SupercriticalInput { .. })
        ));
        let k1 = JumpKernel::named("srw-d1").unwrap();
        assert!(matches!(
            critical_threshold(&k1, &TorusGrid::default_for(1)),
            Err(Error::DivergentGreen { .. })
        ));
    }

    #[test]
    fn multi_source_reduces_to_single() {
        let (k, g) = d3();
        let one = PerturbationField::single(3, 1.0, 0.3).unwrap();
        let many = PerturbationField::new(
            1.0,
            vec![Source {
                site: vec![0, 0, 0],
                sigma: 0.3,
            }],
        )
        .unwrap();
        assert_eq!(
            steady_mean_constant(&k, &g, &one).unwrap(),
            steady_mean_constant(&k, &g, &many).unwrap()
        );
    }

    #[test]
    fn growth_root_residual() {
        let (k, g) = d3();
        let r = growth_eigenvalue(&k, &g, 1.0).unwrap();
        assert!(r.residual <= ROOT_TOL && r.lambda > 0.0 && !r.boundary);
        let lower = growth_eigenvalue(&k, &g, 0.8).unwrap();
        assert!(lower.lambda < r.lambda);
        assert!(matches!(
            growth_eigenvalue(&k, &g, 0.5),
            Err(Error::NoRoot { .. })
        ));
        let k1 = JumpKernel::named("srw-d1").unwrap();
        let r = growth_eigenvalue(&k1, &TorusGrid::default_for(1), 0.2).unwrap();
        // closed form for the 1D walk: λ(λ + 2) = σ²
        assert!((r.lambda - (-1.0 + (1.0f64 + 0.04).sqrt())).abs() < 1e-9);
    }

    #[test]
    fn boundary_is_flagged() {
        let (k, g) = d3();
        let i0 = resolvent_for_root(&k, &g, 0.0).unwrap();
        let r = growth_eigenvalue(&k, &g, 1.0 / i0).unwrap();
        assert!(r.boundary && r.lambda == 0.0);
    }

    #[test]
    fn report_regimes() {
        let (k, g) = d3();
        for (sigma, regime) in [(0.5, Regime::Subcritical), (0.7, Regime::Supercritical)] {
            let f = PerturbationField::single(3, 1.0, sigma).unwrap();
            let r = spectral_report(&k, &g, &f).unwrap();
            assert_eq!(r.regime, regime);
            assert_eq!(
                r.growth_eigenvalue.is_some(),
                regime == Regime::Supercritical
            );
            assert_eq!(r.steady_constant.is_some(), regime == Regime::Subcritical);
        }
    }
}
