//! Checks of the moment inequalities and the `D_l` sequence.

use num_bigint::BigUint;
use serde::Serialize;

use super::hierarchy::MomentTable;
use crate::error::{Error, Result};

/// `D₁ = 1`, `D_l = Σ_{i=1}^{l-1} C(l-1, i) D_i D_{l-i}`, exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DlSequence {
    pub values: Vec<BigUint>,
}

impl DlSequence {
    /// `D_l ≤ 4^l l!` for every computed `l`.
    pub fn growth_bound_holds(&self) -> Vec<bool> {
        let mut factorial = BigUint::from(1u32);
        let mut four = BigUint::from(1u32);
        self.values
            .iter()
            .enumerate()
            .map(|(i, d)| {
                factorial *= (i + 1) as u32;
                four *= 4u32;
                *d <= &four * &factorial
            })
            .collect()
    }
}

pub fn catalan_d(max_order: usize) -> Result<DlSequence> {
    if max_order < 1 {
        return Err(Error::InvalidInput("D_l needs at least one term".into()));
    }
    let mut binom_row = vec![BigUint::from(1u32)];
    let mut d: Vec<BigUint> = vec![BigUint::from(1u32)];
    for l in 2..=max_order {
        // binom_row = C(l-1, ·)
        let mut next = vec![BigUint::from(1u32); l];
        for i in 1..l - 1 {
            next[i] = &binom_row[i - 1] + &binom_row[i];
        }
        binom_row = next;
        let mut acc = BigUint::from(0u32);
        for i in 1..l {
            acc += &binom_row[i] * &d[i - 1] * &d[l - i - 1];
        }
        d.push(acc);
    }
    Ok(DlSequence { values: d })
}

/// Largest `m_l / (K^{l-1} B^l l! p)` per order over all checkpoints with
/// `t > 0` and all sites where either side is nonzero.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub constant_k: f64,
    pub constant_b: f64,
    pub max_ratio: Vec<f64>,
    /// `(t_index, site)` of each maximum.
    pub argmax: Vec<Option<(usize, usize)>>,
    pub tolerance: f64,
    pub pass: bool,
}

/// `p[j][site]` must be the heat kernel `p(t_j, x, y₀)` on the table's grid.
/// With `radius`, only sites with `|x|_∞ ≤ radius` are compared.
pub fn moment_bound_check(
    table: &MomentTable,
    constant_k: f64,
    constant_b: f64,
    p: &[Vec<f64>],
    tolerance: f64,
    radius: Option<i64>,
) -> Result<BoundReport> {
    if p.len() != table.times.len() || p.iter().any(|row| row.len() != table.lattice.site_count()) {
        return Err(Error::InvalidInput(
            "heat kernel values do not match the moment table".into(),
        ));
    }
    let mut max_ratio = vec![0.0f64; table.max_order];
    let mut argmax = vec![None; table.max_order];
    let included: Vec<bool> = (0..table.lattice.site_count())
        .map(|i| radius.map_or(true, |r| table.lattice.sup_norm(i) <= r))
        .collect();
    let mut factorial = 1.0;
    for l in 1..=table.max_order {
        factorial *= l as f64;
        let scale = constant_k.powi(l as i32 - 1) * constant_b.powi(l as i32) * factorial;
        for (j, &t) in table.times.iter().enumerate() {
            if t == 0.0 {
                continue;
            }
            for (site, (&m, &pv)) in table.order(l, j).iter().zip(&p[j]).enumerate() {
                if !included[site] {
                    continue;
                }
                let ratio = if pv > 0.0 {
                    m / (scale * pv)
                } else if m > 0.0 {
                    f64::INFINITY
                } else {
                    continue;
                };
                if ratio > max_ratio[l - 1] {
                    max_ratio[l - 1] = ratio;
                    argmax[l - 1] = Some((j, site));
                }
            }
        }
    }
    let pass = max_ratio.iter().all(|&r| r <= 1.0 + tolerance);
    Ok(BoundReport {
        constant_k,
        constant_b,
        max_ratio,
        argmax,
        tolerance,
        pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MajorizationReport {
    /// `m₁(t, x, 0) ≤ m₁(t, 0, 0)` for every site and checkpoint.
    pub holds: bool,
    /// Smallest `m₁(t, 0, 0) − m₁(t, x, y)` over all checked pairs.
    pub worst_margin: f64,
    /// Site of the maximum of `m₁(t_j, ·, 0)` per checkpoint.
    pub argmax: Vec<Vec<i64>>,
    /// Whether the second inequality was checked against other targets.
    pub checked_other_targets: usize,
}

/// Checks `m₁(t, x, 0) ≤ m₁(t, 0, 0)` on the origin-target table, and
/// `m₁(t, x, y) ≤ m₁(t, 0, 0)` for each additional table with target `y`
/// solved on the same box and times.
pub fn majorization_check(
    origin: &MomentTable,
    others: &[&MomentTable],
) -> Result<MajorizationReport> {
    let d = origin.lattice.dimension();
    if origin.target.iter().any(|&c| c != 0) {
        return Err(Error::InvalidInput(
            "majorization needs the table with target at the origin".into(),
        ));
    }
    let zero = origin.lattice.index(&vec![0; d]).expect("origin in box");
    let mut worst = f64::INFINITY;
    let mut argmax = Vec::with_capacity(origin.times.len());
    for j in 0..origin.times.len() {
        let m = origin.order(1, j);
        let peak = m[zero];
        let (best, _) =
            m.iter().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
            );
        argmax.push(origin.lattice.site(best));
        worst = worst.min(m.iter().map(|&v| peak - v).fold(f64::INFINITY, f64::min));
        for other in others {
            if other.times != origin.times || other.lattice != origin.lattice {
                return Err(Error::InvalidInput(
                    "tables must share box and checkpoints".into(),
                ));
            }
            worst = worst.min(
                other
                    .order(1, j)
                    .iter()
                    .map(|&v| peak - v)
                    .fold(f64::INFINITY, f64::min),
            );
        }
    }
    Ok(MajorizationReport {
        holds: worst >= 0.0,
        worst_margin: worst,
        argmax,
        checked_other_targets: others.len(),
    })
}

/// `(M_l / l!)^{1/l}` with `M_l = max m_l` over the table.
pub fn carleman_profile(table: &MomentTable) -> Vec<f64> {
    let mut factorial = 1.0;
    (1..=table.max_order)
        .map(|l| {
            factorial *= l as f64;
            let peak = (0..table.times.len())
                .flat_map(|j| table.order(l, j).iter().copied())
                .fold(0.0f64, f64::max);
            (peak / factorial).powf(1.0 / l as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leading_terms() {
        let d = catalan_d(6).unwrap();
        let expected: Vec<BigUint> = [1u32, 1, 3, 15, 105, 945]
            .iter()
            .map(|&v| BigUint::from(v))
            .collect();
        assert_eq!(d.values, expected);
    }

    #[test]
    fn growth_bound_through_thirty() {
        let d = catalan_d(30).unwrap();
        assert!(d.growth_bound_holds().iter().all(|&b| b));
        // D_30 = 59!! exceeds u128
        assert!(d.values[29].bits() > 64);
    }
}
