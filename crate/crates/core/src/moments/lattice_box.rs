//! Finite boxes `{-R..R}^d` and the sparse generator `H = L_a + V` on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{JumpKernel, Point};
use crate::spectral::PerturbationField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Jumps leaving the box are lost.
    #[default]
    Absorbing,
    /// Coordinates wrap modulo `2R + 1`.
    Periodic,
}

/// The cube `{-R, ..., R}^d` centred at the origin, indexed row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatticeBox {
    dimension: usize,
    half_width: usize,
    boundary: Boundary,
}

impl LatticeBox {
    pub fn new(dimension: usize, half_width: usize, boundary: Boundary) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidInput("box dimension must be positive".into()));
        }
        let side = 2 * half_width + 1;
        if (side as f64).powi(dimension as i32) > 5e8 {
            return Err(Error::InvalidInput(format!(
                "box of side {side} in dimension {dimension} is too large"
            )));
        }
        Ok(Self {
            dimension,
            half_width,
            boundary,
        })
    }

    /// Default half-width `ceil(6√t_end)` plus the largest source offset.
    pub fn default_half_width(t_end: f64, field: &PerturbationField) -> usize {
        let spread = (6.0 * t_end.max(0.0).sqrt()).ceil() as usize;
        let offset = field
            .sources()
            .iter()
            .flat_map(|s| s.site.iter().map(|c| c.unsigned_abs() as usize))
            .max()
            .unwrap_or(0);
        spread.max(1) + offset
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn site_count(&self) -> usize {
        self.side().pow(self.dimension as u32)
    }

    /// Index of `x`; periodic boxes wrap, absorbing boxes return `None` outside.
    pub fn index(&self, x: &[i64]) -> Option<usize> {
        if x.len() != self.dimension {
            return None;
        }
        let r = self.half_width as i64;
        let side = self.side() as i64;
        let mut flat = 0usize;
        for &c in x {
            let c = match self.boundary {
                Boundary::Absorbing if c.abs() > r => return None,
                Boundary::Absorbing => c,
                Boundary::Periodic => (c + r).rem_euclid(side) - r,
            };
            flat = flat * side as usize + (c + r) as usize;
        }
        Some(flat)
    }

    pub fn site(&self, mut index: usize) -> Point {
        let side = self.side();
        let r = self.half_width as i64;
        let mut x = vec![0; self.dimension];
        for a in (0..self.dimension).rev() {
            x[a] = (index % side) as i64 - r;
            index /= side;
        }
        x
    }

    pub fn sites(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.site_count()).map(|i| self.site(i))
    }

    /// Sup-norm of the site at `index`.
    pub fn sup_norm(&self, index: usize) -> i64 {
        self.site(index).iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    /// `H = L_a + V` with `V` from `field` (pass an unperturbed field for `L_a`).
    ///
    /// Absorbing boxes keep the diagonal at `-1 + V(x)`. Periodic boxes set
    /// it to minus the floating-point sum of the row's off-diagonal entries
    /// (plus `V`), so constant vectors are annihilated exactly when `V = 0`.
    pub fn generator(
        &self,
        kernel: &JumpKernel,
        field: &PerturbationField,
    ) -> Result<SparseGenerator> {
        if kernel.dimension() != self.dimension {
            return Err(Error::InvalidInput(
                "kernel and box dimensions differ".into(),
            ));
        }
        field.check_dimension(self.dimension)?;
        for s in field.sources() {
            let inside = s
                .site
                .iter()
                .all(|c| c.unsigned_abs() as usize <= self.half_width);
            if !inside {
                return Err(Error::SourceOutsideBox {
                    site: s.site.clone(),
                });
            }
        }
        let n = self.site_count();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut diag = Vec::with_capacity(n);
        let mut potential = vec![0.0; n];
        for s in field.sources() {
            potential[self.index(&s.site).expect("source inside box")] += s.sigma;
        }
        row_ptr.push(0);
        let mut y = vec![0; self.dimension];
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..n {
            let x = self.site(i);
            row.clear();
            for jump in kernel.jumps() {
                for a in 0..self.dimension {
                    y[a] = x[a] + jump.z[a];
                }
                if let Some(j) = self.index(&y) {
                    if j == i {
                        continue;
                    }
                    match row.iter_mut().find(|e| e.0 == j) {
                        Some(e) => e.1 += jump.rate,
                        None => row.push((j, jump.rate)),
                    }
                }
            }
            row.sort_by_key(|e| e.0);
            let off: f64 = row.iter().map(|e| e.1).sum();
            let d = match self.boundary {
                Boundary::Absorbing => -1.0 + potential[i],
                Boundary::Periodic => -off + potential[i],
            };
            diag.push(d);
            for &(j, v) in &row {
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(SparseGenerator {
            row_ptr,
            cols,
            vals,
            diag,
            potential,
        })
    }
}

/// Square sparse matrix in CSR form with the diagonal stored separately.
#[derive(Debug, Clone)]
pub struct SparseGenerator {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
    potential: Vec<f64>,
}

impl SparseGenerator {
    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// `V(x)` per site.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Off-diagonal entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    /// `out = H v`. Off-diagonal terms are summed before the diagonal one.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        for i in 0..self.size() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * v[self.cols[k]];
            }
            out[i] = acc + self.diag[i] * v[i];
        }
    }

    /// Largest `|diag| + Σ|offdiag|` over rows; bounds the spectral radius.
    pub fn gershgorin_bound(&self) -> f64 {
        (0..self.size())
            .map(|i| self.diag[i].abs() + self.row(i).map(|e| e.1.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.size()).all(|i| {
            self.row(i)
                .all(|(j, v)| self.row(j).any(|(k, w)| k == i && w == v))
        })
    }
}
