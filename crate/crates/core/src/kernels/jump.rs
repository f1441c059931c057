//! Symmetric jump distributions on the integer lattice.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A lattice point or displacement.
pub type Point = Vec<i64>;

const NORMALIZATION_TOL: f64 = 1e-12;

/// One support entry of a jump kernel: displacement `z` taken at rate `rate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub z: Point,
    pub rate: f64,
}

/// Finite-support symmetric jump distribution `a(z)` with total rate one.
///
/// The walk generated by the kernel jumps from `x` to `x + z` at rate `a(z)`;
/// construction rejects kernels that are not symmetric, not normalized, or
/// whose support does not generate the whole lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpKernel {
    dimension: usize,
    jumps: Vec<Jump>,
}

impl JumpKernel {
    pub fn new(dimension: usize, jumps: Vec<Jump>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidKernel("dimension must be positive".into()));
        }
        if jumps.is_empty() {
            return Err(Error::InvalidKernel("empty support".into()));
        }
        for j in &jumps {
            if j.z.len() != dimension {
                return Err(Error::InvalidKernel(format!(
                    "jump {:?} does not have dimension {dimension}",
                    j.z
                )));
            }
            if j.z.iter().all(|&c| c == 0) {
                return Err(Error::InvalidKernel("zero displacement in support".into()));
            }
            if !(j.rate > 0.0 && j.rate.is_finite()) {
                return Err(Error::InvalidKernel(format!(
                    "rate {} for {:?} is not positive",
                    j.rate, j.z
                )));
            }
        }
        for (i, j) in jumps.iter().enumerate() {
            if jumps[..i].iter().any(|k| k.z == j.z) {
                return Err(Error::InvalidKernel(format!(
                    "duplicate displacement {:?}",
                    j.z
                )));
            }
            let neg: Point = j.z.iter().map(|c| -c).collect();
            match jumps.iter().find(|k| k.z == neg) {
                Some(k) if k.rate == j.rate => {}
                Some(k) => {
                    return Err(Error::InvalidKernel(format!(
                        "asymmetric rates a({:?}) = {} but a({:?}) = {}",
                        j.z, j.rate, k.z, k.rate
                    )))
                }
                None => {
                    return Err(Error::InvalidKernel(format!(
                        "displacement {:?} present without its negative",
                        j.z
                    )))
                }
            }
        }
        let total: f64 = jumps.iter().map(|j| j.rate).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidKernel(format!(
                "rates sum to {total}, expected 1"
            )));
        }
        let generators: Vec<&[i64]> = jumps.iter().map(|j| j.z.as_slice()).collect();
        if !spans_lattice(dimension, &generators) {
            return Err(Error::InvalidKernel(
                "support does not generate the full integer lattice".into(),
            ));
        }
        Ok(Self { dimension, jumps })
    }

    /// Nearest-neighbour walk: rate `1/(2d)` to each of the `2d` neighbours.
    pub fn nearest_neighbor(dimension: usize) -> Self {
        let rate = 1.0 / (2 * dimension) as f64;
        let mut jumps = Vec::with_capacity(2 * dimension);
        for axis in 0..dimension {
            for sign in [1, -1] {
                let mut z = vec![0; dimension];
                z[axis] = sign;
                jumps.push(Jump { z, rate });
            }
        }
        Self { dimension, jumps }
    }

    /// Built-in kernels: `srw-d<d>` for the nearest-neighbour walk in dimension `d`.
    pub fn named(name: &str) -> Result<Self> {
        let d = name
            .strip_prefix("srw-d")
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&d| (1..=8).contains(&d))
            .ok_or_else(|| Error::InvalidKernel(format!("unknown kernel name {name:?}")))?;
        Ok(Self::nearest_neighbor(d))
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    /// Fourier symbol `â(k) = Σ a(z) cos(k·z)`.
    pub fn symbol(&self, k: &[f64]) -> f64 {
        debug_assert_eq!(k.len(), self.dimension);
        self.jumps
            .iter()
            .map(|j| {
                let phase: f64 = j.z.iter().zip(k).map(|(&z, &kk)| z as f64 * kk).sum();
                j.rate * phase.cos()
            })
            .sum()
    }

    /// Covariance matrix `Σ_ij = Σ_z a(z) z_i z_j` of one jump (row-major).
    pub fn covariance(&self) -> Vec<f64> {
        let d = self.dimension;
        let mut cov = vec![0.0; d * d];
        for j in &self.jumps {
            for a in 0..d {
                for b in 0..d {
                    cov[a * d + b] += j.rate * (j.z[a] * j.z[b]) as f64;
                }
            }
        }
        cov
    }

    /// Largest sup-norm of any displacement in the support.
    pub fn range(&self) -> i64 {
        self.jumps
            .iter()
            .flat_map(|j| j.z.iter().map(|c| c.abs()))
            .max()
            .unwrap_or(0)
    }

    /// Splits the kernel into independent per-axis walks when every jump
    /// moves along a single coordinate axis.
    pub fn axis_factors(&self) -> Option<Vec<AxisKernel>> {
        let mut factors = vec![AxisKernel { jumps: Vec::new() }; self.dimension];
        for j in &self.jumps {
            let mut nonzero = j.z.iter().enumerate().filter(|(_, &c)| c != 0);
            let (axis, &step) = nonzero.next()?;
            if nonzero.next().is_some() {
                return None;
            }
            factors[axis].jumps.push((step, j.rate));
        }
        Some(factors)
    }
}

/// One-dimensional factor of an axis-separable kernel; rates are not normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisKernel {
    pub jumps: Vec<(i64, f64)>,
}

impl AxisKernel {
    pub fn total_rate(&self) -> f64 {
        self.jumps.iter().map(|j| j.1).sum()
    }

    /// Variance rate `Σ a(n) n²`.
    pub fn variance_rate(&self) -> f64 {
        self.jumps.iter().map(|&(n, r)| r * (n * n) as f64).sum()
    }

    pub fn symbol(&self, k: f64) -> f64 {
        self.jumps
            .iter()
            .map(|&(n, r)| r * (n as f64 * k).cos())
            .sum()
    }

    pub fn range(&self) -> i64 {
        self.jumps.iter().map(|j| j.0.abs()).max().unwrap_or(0)
    }
}

/// Whether the integer span of `generators` is all of `Z^d`.
///
/// Row-reduces the generator matrix over the integers (Euclid on each
/// column) into echelon form; the lattice is `Z^d` iff there are `d`
/// pivots of absolute value one.
pub fn spans_lattice(dimension: usize, generators: &[&[i64]]) -> bool {
    let mut rows: Vec<Vec<i128>> = generators
        .iter()
        .map(|g| g.iter().map(|&c| c as i128).collect())
        .collect();
    let mut pivot_row = 0;
    for col in 0..dimension {
        loop {
            // row with the smallest nonzero |entry| in this column
            let best = (pivot_row..rows.len())
                .filter(|&r| rows[r][col] != 0)
                .min_by_key(|&r| rows[r][col].abs());
            let Some(best) = best else { return false };
            rows.swap(pivot_row, best);
            let p = rows[pivot_row][col];
            let mut reduced = true;
            for r in pivot_row + 1..rows.len() {
                let q = rows[r][col] / p;
                if q != 0 {
                    for c in col..dimension {
                        rows[r][c] -= q * rows[pivot_row][c];
                    }
                }
                if rows[r][col] != 0 {
                    reduced = false;
                }
            }
            if reduced {
                break;
            }
        }
        if rows[pivot_row][col].abs() != 1 {
            return false;
        }
        pivot_row += 1;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn symbol_examples() {
        let k1 = JumpKernel::named("srw-d1").unwrap();
        assert_eq!(k1.symbol(&[0.0]), 1.0);
        assert!((k1.symbol(&[PI]) + 1.0).abs() < 1e-15);
        let k3 = JumpKernel::named("srw-d3").unwrap();
        assert!(k3.symbol(&[PI / 2.0; 3]).abs() < 1e-15);
        assert!((k3.symbol(&[0.0; 3]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_asymmetric_and_unnormalized() {
        let bad = JumpKernel::new(
            1,
            vec![
                Jump {
                    z: vec![1],
                    rate: 0.6,
                },
                Jump {
                    z: vec![-1],
                    rate: 0.4,
                },
            ],
        );
        assert!(matches!(bad, Err(Error::InvalidKernel(_))));
        let bad = JumpKernel::new(
            1,
            vec![
                Jump {
                    z: vec![1],
                    rate: 0.4,
                },
                Jump {
                    z: vec![-1],
                    rate: 0.4,
                },
            ],
        );
        assert!(matches!(bad, Err(Error::InvalidKernel(_))));
        let bad = JumpKernel::new(
            1,
            vec![Jump {
                z: vec![1],
                rate: 1.0,
            }],
        );
        assert!(matches!(bad, Err(Error::InvalidKernel(_))));
    }

    #[test]
    fn irreducibility() {
        // steps of two only reach the even sublattice
        let even = JumpKernel::new(
            1,
            vec![
                Jump {
                    z: vec![2],
                    rate: 0.5,
                },
                Jump {
                    z: vec![-2],
                    rate: 0.5,
                },
            ],
        );
        assert!(even.is_err());
        // {±2, ±3} generates Z
        let k = JumpKernel::new(
            1,
            vec![
                Jump {
                    z: vec![2],
                    rate: 0.25,
                },
                Jump {
                    z: vec![-2],
                    rate: 0.25,
                },
                Jump {
                    z: vec![3],
                    rate: 0.25,
                },
                Jump {
                    z: vec![-3],
                    rate: 0.25,
                },
            ],
        );
        assert!(k.is_ok());
        // diagonal steps (±1, ±1) generate an index-2 sublattice of Z²
        assert!(!spans_lattice(2, &[&[1, 1], &[1, -1], &[-1, 1], &[-1, -1]]));
        assert!(spans_lattice(2, &[&[1, 1], &[0, 1]]));
        assert!(!spans_lattice(3, &[&[1, 0, 0], &[0, 1, 0]]));
    }

    #[test]
    fn named_kernels() {
        for d in [1, 2, 3, 5] {
            let k = JumpKernel::named(&format!("srw-d{d}")).unwrap();
            assert_eq!(k.dimension(), d);
            assert_eq!(k.jumps().len(), 2 * d);
            assert!(JumpKernel::new(d, k.jumps().to_vec()).is_ok());
            assert_eq!(k.axis_factors().unwrap().len(), d);
        }
        assert!(JumpKernel::named("levy").is_err());
    }
}
