//! Generating function `φ_z(t, x, y₀) = E z^{n(t, x, y₀)}` from the KPP equation.

use serde::Serialize;

use super::lattice_box::{LatticeBox, SparseGenerator};
use super::ode::{check_times, march};
use crate::error::{Error, Result};
use crate::spectral::PerturbationField;

const RANGE_TOL: f64 = 1e-9;

/// The solution is stored as the deficit `u = 1 − φ_z`, which keeps full
/// relative precision when `φ_z` is close to one.
#[derive(Debug, Clone, Serialize)]
pub struct GeneratingFunction {
    pub z: f64,
    pub times: Vec<f64>,
    /// `deficit[j][site] = 1 − φ_z(t_j, x)`.
    pub deficit: Vec<Vec<f64>>,
}

impl GeneratingFunction {
    pub fn phi(&self, t_index: usize, site: usize) -> f64 {
        1.0 - self.deficit[t_index][site]
    }
}

/// Integrates `φ_t = L_a φ + β φ² − (β + μ) φ + μ`, `φ(0) = z` at `y₀` and `1`
/// elsewhere, written for the deficit as `u_t = H u − β u²`.
pub fn kpp_generating_function(
    h: &SparseGenerator,
    lattice: &LatticeBox,
    field: &PerturbationField,
    z: f64,
    target: &[i64],
    times: &[f64],
    dt: f64,
) -> Result<GeneratingFunction> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::InvalidInput(format!(
            "z must lie in [0, 1], got {z}"
        )));
    }
    check_times(times, dt)?;
    let n = lattice.site_count();
    if h.size() != n {
        return Err(Error::InvalidInput(
            "generator does not match the box".into(),
        ));
    }
    let beta: Vec<f64> = h.potential().iter().map(|v| field.mu() + v).collect();
    let mut u = vec![0.0; n];
    let i0 = lattice
        .index(target)
        .ok_or_else(|| Error::InvalidInput(format!("target site {target:?} outside the box")))?;
    u[i0] = 1.0 - z;
    let mut deficit = Vec::with_capacity(times.len());
    march(
        &mut u,
        times,
        dt,
        |v, out| {
            h.apply(v, out);
            for x in 0..n {
                out[x] -= beta[x] * v[x] * v[x];
            }
        },
        |_, v| {
            if let Some((site, &x)) = v
                .iter()
                .enumerate()
                .find(|(_, &x)| !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&x))
            {
                return Err(Error::RangeViolation {
                    value: 1.0 - x,
                    site,
                });
            }
            deficit.push(v.to_vec());
            Ok(())
        },
    )?;
    Ok(GeneratingFunction {
        z,
        times: times.to_vec(),
        deficit,
    })
}

/// `m₁` and `m₂` per checkpoint and site from one-sided differences of
/// `φ_z` at `z = 1` over the stencil `{1, 1−h, 1−2h, 1−3h}`.
#[derive(Debug, Clone, Serialize)]
pub struct KppMoments {
    pub times: Vec<f64>,
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
}

pub fn kpp_factorial_moments(
    h_op: &SparseGenerator,
    lattice: &LatticeBox,
    field: &PerturbationField,
    target: &[i64],
    times: &[f64],
    dt: f64,
    step: f64,
) -> Result<KppMoments> {
    if !(step > 0.0 && step <= 0.25) {
        return Err(Error::InvalidInput(format!(
            "difference step must lie in (0, 0.25], got {step}"
        )));
    }
    let solves: Vec<GeneratingFunction> = (1..=3)
        .map(|j| {
            kpp_generating_function(
                h_op,
                lattice,
                field,
                1.0 - j as f64 * step,
                target,
                times,
                dt,
            )
        })
        .collect::<Result<_>>()?;
    let n = lattice.site_count();
    let mut first = Vec::with_capacity(times.len());
    let mut second = Vec::with_capacity(times.len());
    for t in 0..times.len() {
        // φ(1) = 1 exactly, so differences of φ are minus differences of u with u(1) = 0
        let (u1, u2, u3) = (
            &solves[0].deficit[t],
            &solves[1].deficit[t],
            &solves[2].deficit[t],
        );
        first.push(
            (0..n)
                .map(|x| (18.0 * u1[x] - 9.0 * u2[x] + 2.0 * u3[x]) / (6.0 * step))
                .collect(),
        );
        second.push(
            (0..n)
                .map(|x| (5.0 * u1[x] - 4.0 * u2[x] + u3[x]) / (step * step))
                .collect(),
        );
    }
    Ok(KppMoments {
        times: times.to_vec(),
        first,
        second,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::JumpKernel;
    use crate::moments::Boundary;

    fn setup() -> (LatticeBox, SparseGenerator, PerturbationField) {
        let k = JumpKernel::named("srw-d1").unwrap();
        let b = LatticeBox::new(1, 6, Boundary::Absorbing).unwrap();
        let f = PerturbationField::single(1, 1.0, 0.2).unwrap();
        let h = b.generator(&k, &f).unwrap();
        (b, h, f)
    }

    #[test]
    fn z_one_is_a_fixed_point() {
        let (b, h, f) = setup();
        let g = kpp_generating_function(&h, &b, &f, 1.0, &[0], &[1.0, 5.0], 0.05).unwrap();
        assert!(g.deficit.iter().flatten().all(|&u| u == 0.0));
    }

    #[test]
    fn extinction_probability_is_a_probability() {
        let (b, h, f) = setup();
        let g = kpp_generating_function(&h, &b, &f, 0.0, &[0], &[0.5, 2.0, 8.0], 0.05).unwrap();
        for t in 0..3 {
            for x in 0..b.site_count() {
                let p = g.phi(t, x);
                assert!((0.0..=1.0).contains(&p));
            }
        }
        assert!(kpp_generating_function(&h, &b, &f, 1.5, &[0], &[1.0], 0.05).is_err());
    }

    #[test]
    fn single_site_generating_function() {
        // isolated site: critical binary branching killed at rate 1
        let k = JumpKernel::named("srw-d1").unwrap();
        let b = LatticeBox::new(1, 0, Boundary::Absorbing).unwrap();
        let f = PerturbationField::unperturbed(0.7).unwrap();
        let h = b.generator(&k, &f).unwrap();
        let m = kpp_factorial_moments(&h, &b, &f, &[0], &[3.0], 0.01, 1e-3).unwrap();
        let m1 = (-3.0f64).exp();
        let m2 = 1.4 * ((-3.0f64).exp() - (-6.0f64).exp());
        assert!((m.first[0][0] - m1).abs() < 1e-8 * m1);
        assert!((m.second[0][0] - m2).abs() < 1e-5 * m2);
    }
}
