//! Linear first-moment equation and the factorial-moment hierarchy.

use serde::{Deserialize, Serialize};

use super::lattice_box::{Boundary, LatticeBox, SparseGenerator};
use super::ode::{check_times, march};
use crate::error::{Error, Result};
use crate::kernels::Point;
use crate::spectral::PerturbationField;

/// Negative values below `-NEGATIVITY_TOL · max|m|` abort a solve.
const NEGATIVITY_TOL: f64 = 1e-9;
/// Boundary-face value (relative to the maximum) that triggers a truncation warning.
const LEAK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialData {
    /// `m₁(0, x) = δ_x(y₀)`.
    Delta(Point),
    /// `m₁(0, x) = 1`, the one-particle-per-site field.
    Ones,
}

/// `m₁(t_j, x)` for every checkpoint and box site.
#[derive(Debug, Clone, Serialize)]
pub struct FirstMoment {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl FirstMoment {
    pub fn at(&self, lattice: &LatticeBox, t_index: usize, x: &[i64]) -> Option<f64> {
        lattice.index(x).map(|i| self.values[t_index][i])
    }
}

/// Explicit RK4 for `∂m₁/∂t = H m₁`.
pub fn solve_first_moment(
    h: &SparseGenerator,
    lattice: &LatticeBox,
    init: &InitialData,
    times: &[f64],
    dt: f64,
) -> Result<FirstMoment> {
    check_times(times, dt)?;
    if h.size() != lattice.site_count() {
        return Err(Error::InvalidInput(
            "generator does not match the box".into(),
        ));
    }
    let mut y = initial_vector(lattice, init)?;
    let mut values = Vec::with_capacity(times.len());
    march(
        &mut y,
        times,
        dt,
        |v, out| h.apply(v, out),
        |_, v| {
            check_nonnegative(v, 1)?;
            values.push(v.to_vec());
            Ok(())
        },
    )?;
    let mut warnings = Vec::new();
    if let Some(w) = truncation_warning(lattice, init, times, &values, 1) {
        warnings.push(w);
    }
    Ok(FirstMoment {
        times: times.to_vec(),
        values,
        warnings,
    })
}

fn initial_vector(lattice: &LatticeBox, init: &InitialData) -> Result<Vec<f64>> {
    let n = lattice.site_count();
    Ok(match init {
        InitialData::Ones => vec![1.0; n],
        InitialData::Delta(y0) => {
            let mut v = vec![0.0; n];
            let i = lattice.index(y0).ok_or_else(|| {
                Error::InvalidInput(format!("target site {y0:?} outside the box"))
            })?;
            v[i] = 1.0;
            v
        }
    })
}

fn check_nonnegative(v: &[f64], order: usize) -> Result<()> {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some((i, &x)) = v
        .iter()
        .enumerate()
        .find(|(_, &x)| x < -NEGATIVITY_TOL * scale.max(1e-300))
    {
        return Err(Error::UnstableStep(format!(
            "order {order} value {x:e} at site index {i}"
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::UnstableStep(format!(
            "order {order} became non-finite"
        )));
    }
    Ok(())
}

fn truncation_warning(
    lattice: &LatticeBox,
    init: &InitialData,
    times: &[f64],
    values: &[Vec<f64>],
    order: usize,
) -> Option<String> {
    if lattice.boundary() != Boundary::Absorbing {
        return None;
    }
    let t_end = times.last().copied().unwrap_or(0.0);
    match init {
        InitialData::Ones => {
            let r = lattice.half_width() as f64;
            let limit = r * r / (4.0 * lattice.dimension() as f64);
            (t_end > limit).then(|| {
                format!("t_end = {t_end} exceeds R²/(4d) = {limit:.2}; box truncation may bias the centre")
            })
        }
        InitialData::Delta(_) => {
            let r = lattice.half_width() as i64;
            let face: Vec<usize> = (0..lattice.site_count())
                .filter(|&i| lattice.sup_norm(i) == r)
                .collect();
            let worst = values
                .iter()
                .map(|v| {
                    let max = v.iter().fold(0.0f64, |m, &x| m.max(x));
                    let edge = face.iter().fold(0.0f64, |m, &i| m.max(v[i]));
                    if max > 0.0 {
                        edge / max
                    } else {
                        0.0
                    }
                })
                .fold(0.0f64, f64::max);
            (worst > LEAK_TOL).then(|| {
                format!("order {order}: boundary values reach {worst:.2e} of the maximum; enlarge the box")
            })
        }
    }
}

/// Factorial moments `m_l(t_j, x, y₀)`, `l = 1..=L`.
#[derive(Debug, Clone, Serialize)]
pub struct MomentTable {
    pub lattice: LatticeBox,
    pub target: Point,
    pub max_order: usize,
    pub times: Vec<f64>,
    /// `values[j][l - 1][site]`.
    pub values: Vec<Vec<Vec<f64>>>,
    pub dt: f64,
    /// Per order: largest change, relative to the order's maximum, when the
    /// step is halved. `None` when step halving was not requested.
    pub step_error: Option<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl MomentTable {
    pub fn get(&self, order: usize, t_index: usize, x: &[i64]) -> Option<f64> {
        if order == 0 || order > self.max_order {
            return None;
        }
        self.lattice
            .index(x)
            .map(|i| self.values[t_index][order - 1][i])
    }

    /// `m_l` over the box at checkpoint `t_index`.
    pub fn order(&self, order: usize, t_index: usize) -> &[f64] {
        &self.values[t_index][order - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentOptions {
    pub dt: f64,
    /// Repeat the solve at `dt/2` and report the difference.
    pub step_halving: bool,
}

/// `0.1 / (1 + σ_tot + 2L(μ + σ_tot) m̂)`, with `m̂` a bound on the lower-order moments.
pub fn default_dt(field: &PerturbationField, max_order: usize, moment_bound: f64) -> f64 {
    let s = field.sigma_total();
    0.1 / (1.0 + s + 2.0 * max_order as f64 * (field.mu() + s) * moment_bound.max(1.0))
}

/// Solves the coupled system
/// `∂m_l/∂t = H m_l + 2β(x) Σ_{i=1}^{l-1} C(l-1, i) m_i m_{l-i}`
/// with `m₁(0) = δ_{y₀}` and `m_l(0) = 0` for `l ≥ 2`.
///
/// All orders advance together in one RK4 state, which is equivalent to
/// solving them in sequence with the exact lower-order source but keeps
/// the source at full fourth order.
pub fn solve_factorial_moments(
    h: &SparseGenerator,
    lattice: &LatticeBox,
    field: &PerturbationField,
    max_order: usize,
    target: &[i64],
    times: &[f64],
    options: MomentOptions,
) -> Result<MomentTable> {
    if max_order < 1 {
        return Err(Error::InvalidInput(
            "moment order must be at least 1".into(),
        ));
    }
    check_times(times, options.dt)?;
    if h.size() != lattice.site_count() {
        return Err(Error::InvalidInput(
            "generator does not match the box".into(),
        ));
    }
    let init = InitialData::Delta(target.to_vec());
    let values = hierarchy_run(h, lattice, field, max_order, &init, times, options.dt)?;
    let step_error = if options.step_halving {
        let fine = hierarchy_run(h, lattice, field, max_order, &init, times, options.dt / 2.0)?;
        let mut errs = vec![0.0f64; max_order];
        for (coarse_t, fine_t) in values.iter().zip(&fine) {
            for l in 0..max_order {
                let scale = fine_t[l].iter().fold(0.0f64, |m, &x| m.max(x.abs()));
                if scale == 0.0 {
                    continue;
                }
                let diff = coarse_t[l]
                    .iter()
                    .zip(&fine_t[l])
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                errs[l] = errs[l].max(diff / scale);
            }
        }
        Some(errs)
    } else {
        None
    };
    let mut warnings = Vec::new();
    for l in 0..max_order {
        let per_order: Vec<Vec<f64>> = values.iter().map(|v| v[l].clone()).collect();
        if let Some(w) = truncation_warning(lattice, &init, times, &per_order, l + 1) {
            warnings.push(w);
        }
    }
    Ok(MomentTable {
        lattice: lattice.clone(),
        target: target.to_vec(),
        max_order,
        times: times.to_vec(),
        values,
        dt: options.dt,
        step_error,
        warnings,
    })
}

fn hierarchy_run(
    h: &SparseGenerator,
    lattice: &LatticeBox,
    field: &PerturbationField,
    max_order: usize,
    init: &InitialData,
    times: &[f64],
    dt: f64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let n = lattice.site_count();
    let two_beta: Vec<f64> = h
        .potential()
        .iter()
        .map(|v| 2.0 * (field.mu() + v))
        .collect();
    let binom = binomials(max_order);
    let mut y = vec![0.0; n * max_order];
    y[..n].copy_from_slice(&initial_vector(lattice, init)?);
    let mut out = Vec::with_capacity(times.len());
    march(
        &mut y,
        times,
        dt,
        |state, rhs| {
            for l in 1..=max_order {
                let (lo, hi) = ((l - 1) * n, l * n);
                h.apply(&state[lo..hi], &mut rhs[lo..hi]);
                for i in 1..l {
                    let c = binom[l - 1][i];
                    let (a, b) = ((i - 1) * n, (l - i - 1) * n);
                    for x in 0..n {
                        rhs[lo + x] += two_beta[x] * c * state[a + x] * state[b + x];
                    }
                }
            }
        },
        |_, state| {
            let per_order: Vec<Vec<f64>> = state.chunks(n).map(|c| c.to_vec()).collect();
            for (l, v) in per_order.iter().enumerate() {
                check_nonnegative(v, l + 1)?;
            }
            out.push(per_order);
            Ok(())
        },
    )?;
    Ok(out)
}

fn binomials(n: usize) -> Vec<Vec<f64>> {
    let mut c = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        c[i][0] = 1.0;
        for j in 1..=i {
            c[i][j] = c[i - 1][j - 1] + if j < i { c[i - 1][j] } else { 0.0 };
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::JumpKernel;

    #[test]
    fn binomial_table() {
        let c = binomials(5);
        assert_eq!(c[4], vec![1.0, 4.0, 6.0, 4.0, 1.0, 0.0]);
    }

    #[test]
    fn periodic_conservation_is_exact() {
        let k = JumpKernel::named("srw-d2").unwrap();
        let b = LatticeBox::new(2, 4, Boundary::Periodic).unwrap();
        let h = b
            .generator(&k, &PerturbationField::unperturbed(1.0).unwrap())
            .unwrap();
        let m = solve_first_moment(&h, &b, &InitialData::Ones, &[1.0, 10.0], 0.1).unwrap();
        assert!(m.values.iter().flatten().all(|&v| v == 1.0));
    }

    #[test]
    fn delta_data_reproduces_heat_kernel() {
        let k = JumpKernel::named("srw-d1").unwrap();
        let b = LatticeBox::new(1, 25, Boundary::Absorbing).unwrap();
        let h = b
            .generator(&k, &PerturbationField::unperturbed(1.0).unwrap())
            .unwrap();
        let m = solve_first_moment(&h, &b, &InitialData::Delta(vec![0]), &[1.0], 0.01).unwrap();
        // e^{-1} I₀(1)
        assert!((m.at(&b, 0, &[0]).unwrap() - 0.465_759_607_593_640_5).abs() < 1e-9);
        assert!(m.warnings.is_empty());
    }

    #[test]
    fn no_branching_means_no_higher_moments() {
        let k = JumpKernel::named("srw-d1").unwrap();
        let b = LatticeBox::new(1, 10, Boundary::Absorbing).unwrap();
        let f = PerturbationField::unperturbed(0.0).unwrap();
        let h = b.generator(&k, &f).unwrap();
        let opts = MomentOptions {
            dt: 0.05,
            step_halving: false,
        };
        let t = solve_factorial_moments(&h, &b, &f, 3, &[0], &[2.0], opts).unwrap();
        assert!(t.order(2, 0).iter().all(|&v| v == 0.0));
        assert!(t.order(3, 0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn second_moment_of_a_single_site_process() {
        // a single site with no walk is the binary branching process at rate μ:
        // m₂(t) = 2μt for the critical case
        let k = JumpKernel::named("srw-d1").unwrap();
        let b = LatticeBox::new(1, 0, Boundary::Absorbing).unwrap();
        let f = PerturbationField::unperturbed(0.7).unwrap();
        let h = b.generator(&k, &f).unwrap();
        let opts = MomentOptions {
            dt: 0.01,
            step_halving: true,
        };
        let t = solve_factorial_moments(&h, &b, &f, 2, &[0], &[3.0], opts).unwrap();
        // with the walk killing at rate 1: m₁ = e^{-t}, m₂ = 2μ ∫ e^{-(t-s)} e^{-2s} ds
        let expected = 2.0 * 0.7 * ((-3.0f64).exp() - (-6.0f64).exp());
        assert!((t.get(2, 0, &[0]).unwrap() - expected).abs() < 1e-9);
        assert!(t.step_error.unwrap()[1] < 1e-8);
    }
}
