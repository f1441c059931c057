//! Principal Dirichlet eigenvalue of `L_a + δ₀` on a cube.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{JumpKernel, Point};
use crate::moments::{Boundary, LatticeBox};
use crate::spectral::PerturbationField;

const MAX_ITERATIONS: usize = 100_000;
const RAYLEIGH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct BoxEigen {
    pub eigenvalue: f64,
    /// Rayleigh quotient of the product-cosine trial function.
    pub trial_rayleigh: f64,
    pub iterations: usize,
    /// Unit-norm principal eigenvector on the cube interior, with the sites
    /// (translated to the cube centre) in the same order.
    pub eigenvector: Vec<f64>,
    pub sites: Vec<Point>,
}

/// Principal eigenvalue of `L_a + δ₀` on the cube `|x − a|_∞ ≤ L` with the
/// walk killed on leaving the interior `|x − a|_∞ < L`.
///
/// Power iteration on `H + sI` with `s = 2 − δ₀`, which maps the spectrum
/// into `[0, 2]`, started from `ψ₀(x) = Π cos(r(x_a − a_a))`, `r = π/(2L)`.
pub fn box_principal_eigenvalue(
    kernel: &JumpKernel,
    half_width: usize,
    delta: f64,
    center: &[i64],
) -> Result<BoxEigen> {
    let d = kernel.dimension();
    if half_width < 2 {
        return Err(Error::InvalidInput(
            "cube half-width must be at least 2".into(),
        ));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "potential height must be positive, got {delta}"
        )));
    }
    if center.len() != d {
        return Err(Error::InvalidInput(format!(
            "centre must have dimension {d}"
        )));
    }
    let interior = LatticeBox::new(d, half_width - 1, Boundary::Absorbing)?;
    let h = interior.generator(kernel, &PerturbationField::unperturbed(0.0)?)?;
    let n = h.size();
    let shift = 2.0;

    let r = std::f64::consts::PI / (2.0 * half_width as f64);
    let mut psi: Vec<f64> = interior
        .sites()
        .map(|x| x.iter().map(|&c| (r * c as f64).cos()).product())
        .collect();
    normalize(&mut psi);
    let mut hv = vec![0.0; n];
    let rayleigh = |v: &[f64], hv: &mut [f64]| -> f64 {
        h.apply(v, hv);
        v.iter().zip(hv.iter()).map(|(a, b)| a * b).sum::<f64>() + delta
    };
    let trial_rayleigh = rayleigh(&psi, &mut hv);

    let mut previous = trial_rayleigh;
    let mut iterations = 0;
    loop {
        // hv holds H ψ from the last Rayleigh evaluation
        for i in 0..n {
            psi[i] = hv[i] + shift * psi[i];
        }
        normalize(&mut psi);
        iterations += 1;
        let current = rayleigh(&psi, &mut hv);
        if (current - previous).abs() < RAYLEIGH_TOL {
            previous = current;
            break;
        }
        if iterations >= MAX_ITERATIONS {
            return Err(Error::NoConvergence {
                iterations,
                residual: (current - previous).abs(),
            });
        }
        previous = current;
    }
    if let Some(i) = psi.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::NoConvergence {
            iterations,
            residual: psi[i],
        });
    }
    let sites = interior
        .sites()
        .map(|x| x.iter().zip(center).map(|(c, a)| c + a).collect())
        .collect();
    Ok(BoxEigen {
        eigenvalue: previous,
        trial_rayleigh,
        iterations,
        eigenvector: psi,
        sites,
    })
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Jump;

    #[test]
    fn one_dimensional_scaling() {
        let k = JumpKernel::named("srw-d1").unwrap();
        let mut last = f64::NEG_INFINITY;
        for l in [5usize, 10, 20, 40] {
            let e = box_principal_eigenvalue(&k, l, 0.1, &[7]).unwrap();
            assert!(e.eigenvalue > last && e.eigenvalue < 0.1);
            // exact for the nearest-neighbour walk: δ₀ − (1 − cos r)
            let r = std::f64::consts::PI / (2.0 * l as f64);
            assert!((e.eigenvalue - (0.1 - (1.0 - r.cos()))).abs() < 1e-11);
            let scaled = (0.1 - e.eigenvalue) * (l * l) as f64;
            assert!(scaled > 1.0 && scaled < 1.3);
            last = e.eigenvalue;
        }
    }

    #[test]
    fn variational_bound_for_longer_range_walk() {
        let jumps = vec![
            Jump {
                z: vec![1, 0],
                rate: 0.2,
            },
            Jump {
                z: vec![-1, 0],
                rate: 0.2,
            },
            Jump {
                z: vec![0, 1],
                rate: 0.2,
            },
            Jump {
                z: vec![0, -1],
                rate: 0.2,
            },
            Jump {
                z: vec![2, 1],
                rate: 0.05,
            },
            Jump {
                z: vec![-2, -1],
                rate: 0.05,
            },
            Jump {
                z: vec![1, -1],
                rate: 0.05,
            },
            Jump {
                z: vec![-1, 1],
                rate: 0.05,
            },
        ];
        let k = JumpKernel::new(2, jumps).unwrap();
        for (l, delta) in [(3usize, 0.5), (6, 0.05), (8, 10.0)] {
            let e = box_principal_eigenvalue(&k, l, delta, &[0, 0]).unwrap();
            assert!(e.eigenvalue >= e.trial_rayleigh - 1e-12);
            assert!(e.eigenvector.iter().all(|&v| v > 0.0));
            if delta == 10.0 {
                assert!(e.eigenvalue > 0.0);
            }
        }
    }
}
