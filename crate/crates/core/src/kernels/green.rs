//! Green function `G_λ(x, y)` and the resolvent integral `I(λ) = G_λ(0, 0)`.

use super::heat::{axis_heat_kernel, displacement};
use super::jump::JumpKernel;
use super::torus::{midpoint_sum, QuadratureMode, TorusGrid};
use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, integrate_gl, Estimate};

/// Finite-support symmetric irreducible walks are transient iff `d ≥ 3`.
pub fn is_transient(kernel: &JumpKernel) -> bool {
    kernel.dimension() >= 3
}

/// `G_λ(x, y) = (2π)^{-d} ∫ e^{-ik(y-x)} / (λ + 1 - â(k)) dk`.
///
/// In [`QuadratureMode::Extrapolated`] (and `d ≥ 3`) the `N` and `N/2`
/// midpoint sums are combined to cancel the `N^{-(d-2)}` image error of the
/// integrable singularity at `k = 0`; the reported error compares against
/// the same extrapolation one level coarser. For `λ > 0` the plain sum is
/// returned instead when its own error estimate is smaller.
pub fn green_function(
    kernel: &JumpKernel,
    grid: &TorusGrid,
    lambda: f64,
    x: &[i64],
    y: &[i64],
) -> Result<Estimate> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "lambda must be finite and nonnegative, got {lambda}"
        )));
    }
    if grid.dimension != kernel.dimension() {
        return Err(Error::InvalidInput(
            "grid and kernel dimensions differ".into(),
        ));
    }
    if lambda == 0.0 && !is_transient(kernel) {
        return Err(Error::DivergentGreen {
            dimension: kernel.dimension(),
        });
    }
    let disp = displacement(kernel, x, y)?;
    let sum = |n: usize| midpoint_sum(kernel, n, &disp, |a| 1.0 / (lambda + 1.0 - a));
    let n = grid.points_per_axis;
    let d = kernel.dimension();

    let extrapolate = grid.mode == QuadratureMode::Extrapolated && d >= 3;
    let Some(half) = grid.coarsened() else {
        return Ok(Estimate {
            value: sum(n),
            est_error: f64::NAN,
        });
    };
    let fine = sum(n);
    let coarse = sum(half.points_per_axis);
    let plain = Estimate {
        value: fine,
        est_error: (fine - coarse).abs(),
    };
    if !extrapolate {
        return Ok(plain);
    }
    let factor = 2f64.powi(d as i32 - 2) - 1.0;
    let value = fine + (fine - coarse) / factor;
    let richardson = match half.coarsened() {
        Some(quarter) => {
            let coarser = sum(quarter.points_per_axis);
            Estimate {
                value,
                est_error: (value - (coarse + (coarse - coarser) / factor)).abs(),
            }
        }
        None => Estimate {
            value,
            est_error: (value - fine).abs(),
        },
    };
    // For λ > 0 the image sum decays like e^{-c√λ N} and the power-law
    // extrapolation can do more harm than good; keep whichever estimate
    // reports the smaller error.
    Ok(if lambda > 0.0 && plain.est_error < richardson.est_error {
        plain
    } else {
        richardson
    })
}

/// `I(λ) = G_λ(0, 0)`; `+∞` at `λ = 0` for recurrent walks.
pub fn resolvent_integral(kernel: &JumpKernel, grid: &TorusGrid, lambda: f64) -> Result<Estimate> {
    if lambda == 0.0 && !is_transient(kernel) {
        return Ok(Estimate {
            value: f64::INFINITY,
            est_error: 0.0,
        });
    }
    let origin = vec![0; kernel.dimension()];
    green_function(kernel, grid, lambda, &origin, &origin)
}

/// Time horizon of the explicit part of [`green_time_domain`].
const TIME_DOMAIN_HORIZON: f64 = 65_536.0;

/// `G_λ(0, x) = ∫₀^∞ e^{-λt} p(t, 0, x) dt` for axis-separable kernels, with
/// `p(t, 0, x) = Π_a p_a(t, x_a)` built from one-dimensional kernels.
///
/// The integral runs over dyadic Gauss–Legendre panels up to a fixed
/// horizon `T`; beyond `T` the Gaussian local limit replaces `p`, and the
/// substitution `t = T/v²` turns the tail into a smooth integral over
/// `v ∈ (0, 1]`. Accurate at large `|x|` and small `λ`, where torus
/// quadrature would need an impractically fine grid.
pub fn green_time_domain(kernel: &JumpKernel, lambda: f64, x: &[i64]) -> Result<Estimate> {
    let d = kernel.dimension();
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "lambda must be finite and nonnegative, got {lambda}"
        )));
    }
    if lambda == 0.0 && !is_transient(kernel) {
        return Err(Error::DivergentGreen { dimension: d });
    }
    if x.len() != d {
        return Err(Error::InvalidInput(format!(
            "point must have dimension {d}"
        )));
    }
    let axes = kernel.axis_factors().ok_or_else(|| {
        Error::InvalidInput("time-domain Green function needs an axis-separable kernel".into())
    })?;
    let integrand = |t: f64| -> f64 {
        let damp = (-lambda * t).exp();
        if damp == 0.0 {
            return 0.0;
        }
        damp * axes
            .iter()
            .zip(x)
            .map(|(axis, &n)| axis_heat_kernel(axis, t, n))
            .product::<f64>()
    };
    let rule = gauss_legendre(20);
    let mut body = integrate_gl(integrand, 0.0, 1.0, &rule);
    let mut a = 1.0;
    while a < TIME_DOMAIN_HORIZON {
        body += integrate_gl(integrand, a, 2.0 * a, &rule);
        a *= 2.0;
    }

    // Gaussian (2π t)^{-d/2} (Π s_a)^{-1/2} exp(-q / 2t) beyond T, with t = T / v²
    let variances: Vec<f64> = axes.iter().map(|a| a.variance_rate()).collect();
    let q: f64 = x
        .iter()
        .zip(&variances)
        .map(|(&c, &s)| (c * c) as f64 / s)
        .sum();
    let big_t = TIME_DOMAIN_HORIZON;
    let prefactor = (2.0 * std::f64::consts::PI * big_t).powf(-(d as f64) / 2.0) * 2.0 * big_t
        / variances.iter().product::<f64>().sqrt();
    let tail_integrand = |v: f64| -> f64 {
        if v == 0.0 {
            return 0.0;
        }
        let v2 = v * v;
        v.powi(d as i32 - 3) * (-lambda * big_t / v2 - q * v2 / (2.0 * big_t)).exp()
    };
    let mut tail = 0.0;
    let mut hi = 1.0;
    for _ in 0..8 {
        tail += integrate_gl(tail_integrand, 0.5 * hi, hi, &rule);
        hi *= 0.5;
    }
    tail += integrate_gl(tail_integrand, 0.0, hi, &rule);
    tail *= prefactor;
    let min_var = variances.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(Estimate {
        value: body + tail,
        est_error: tail / (min_var * big_t),
    })
}

/// [`green_time_domain`] at `λ = 0`.
pub fn green_zero_time_domain(kernel: &JumpKernel, x: &[i64]) -> Result<Estimate> {
    green_time_domain(kernel, 0.0, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recurrent_walks_diverge_at_zero() {
        for name in ["srw-d1", "srw-d2"] {
            let k = JumpKernel::named(name).unwrap();
            let g = TorusGrid::default_for(k.dimension());
            let origin = vec![0; k.dimension()];
            assert!(matches!(
                green_function(&k, &g, 0.0, &origin, &origin),
                Err(Error::DivergentGreen { .. })
            ));
            assert_eq!(
                resolvent_integral(&k, &g, 0.0).unwrap().value,
                f64::INFINITY
            );
        }
    }

    #[test]
    fn one_dimensional_resolvent_closed_form() {
        // for the 1D walk, I(λ) = 1 / sqrt(λ (λ + 2))
        let k = JumpKernel::named("srw-d1").unwrap();
        let g = TorusGrid::default_for(1);
        for lambda in [0.05, 0.5, 3.0] {
            let v = resolvent_integral(&k, &g, lambda).unwrap().value;
            let exact = 1.0 / (lambda * (lambda + 2.0)).sqrt();
            assert!(
                (v - exact).abs() < 1e-12 * exact,
                "{lambda}: {v} vs {exact}"
            );
        }
    }

    #[test]
    fn large_lambda_limit() {
        let k = JumpKernel::named("srw-d3").unwrap();
        let g = TorusGrid::new(3, 16).unwrap();
        let v = resolvent_integral(&k, &g, 1e6).unwrap().value;
        assert!(v <= 1e-6);
        assert!((1e6 * v - 1.0).abs() < 1e-5);
    }

    #[test]
    fn strictly_decreasing_and_symmetric() {
        let k = JumpKernel::named("srw-d3").unwrap();
        let g = TorusGrid::new(3, 32).unwrap();
        let i0 = resolvent_integral(&k, &g, 0.0).unwrap().value;
        let i1 = resolvent_integral(&k, &g, 0.1).unwrap().value;
        let i5 = resolvent_integral(&k, &g, 0.5).unwrap().value;
        assert!(i5 < i1 && i1 < i0);
        let a = green_function(&k, &g, 0.2, &[0, 0, 0], &[2, 1, 0])
            .unwrap()
            .value;
        let b = green_function(&k, &g, 0.2, &[2, 1, 0], &[0, 0, 0])
            .unwrap()
            .value;
        assert!((a - b).abs() < 1e-15);
        assert!(
            a < green_function(&k, &g, 0.2, &[0, 0, 0], &[0, 0, 0])
                .unwrap()
                .value
        );
    }

    #[test]
    fn time_domain_route_reproduces_origin_value() {
        let k = JumpKernel::named("srw-d3").unwrap();
        let td = green_zero_time_domain(&k, &[0, 0, 0]).unwrap();
        assert!((td.value - 1.516_386).abs() < 2e-6, "{}", td.value);
        let g = TorusGrid::new(3, 64).unwrap();
        let fourier = green_function(&k, &g, 0.0, &[0, 0, 0], &[2, 1, 0]).unwrap();
        let td = green_zero_time_domain(&k, &[2, 1, 0]).unwrap();
        assert!((fourier.value - td.value).abs() < 1e-4);
    }

    #[test]
    fn time_domain_route_with_damping() {
        // both routes are exponentially accurate for λ of order one
        let k = JumpKernel::named("srw-d3").unwrap();
        let g = TorusGrid::with_mode(3, 32, QuadratureMode::Plain).unwrap();
        for (lambda, x) in [(0.5, [0, 0, 0]), (0.3, [1, 2, 0]), (2.0, [3, 0, 0])] {
            let fourier = green_function(&k, &g, lambda, &[0, 0, 0], &x)
                .unwrap()
                .value;
            let td = green_time_domain(&k, lambda, &x).unwrap().value;
            assert!(
                (fourier - td).abs() < 1e-10,
                "{lambda} {x:?}: {fourier} {td}"
            );
        }
        let k1 = JumpKernel::named("srw-d1").unwrap();
        let td = green_time_domain(&k1, 0.5, &[0]).unwrap().value;
        assert!((td - 1.0 / (0.5f64 * 2.5).sqrt()).abs() < 1e-10);
    }
}
