//! Midpoint quadrature on the torus `[-π, π]^d`.
//!
//! Nodes sit at `k_j = -π + (j + ½)·2π/N` on every axis, so the origin is
//! never sampled. A midpoint sum of `f(k) e^{ik·x}` equals the exact Fourier
//! coefficient plus the alternating image sum `Σ_{m≠0} (-1)^{|m|₁} g(x + N m)`,
//! which is what the extrapolation and the error estimates are built on.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};

use super::jump::{Jump, JumpKernel};
use crate::error::{Error, Result};

/// How torus integrals with a singular integrand are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureMode {
    /// Plain product midpoint rule on the `N` grid.
    Plain,
    /// Richardson extrapolation of the `N` and `N/2` midpoint sums, removing
    /// the leading `N^{-(d-2)}` image error of the `|k|^{-2}` singularity.
    #[default]
    Extrapolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    pub dimension: usize,
    pub points_per_axis: usize,
    #[serde(default)]
    pub mode: QuadratureMode,
}

impl TorusGrid {
    pub fn new(dimension: usize, points_per_axis: usize) -> Result<Self> {
        Self::with_mode(dimension, points_per_axis, QuadratureMode::default())
    }

    pub fn with_mode(
        dimension: usize,
        points_per_axis: usize,
        mode: QuadratureMode,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidInput(
                "grid dimension must be positive".into(),
            ));
        }
        if points_per_axis < 8 || points_per_axis % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "points per axis must be even and at least 8, got {points_per_axis}"
            )));
        }
        Ok(Self {
            dimension,
            points_per_axis,
            mode,
        })
    }

    /// Default resolution per dimension; keeps a single sum below ~10⁶ nodes
    /// for `d ≥ 3`.
    pub fn default_for(dimension: usize) -> Self {
        let n = match dimension {
            1 => 2048,
            2 => 256,
            3 => 64,
            4 => 32,
            5 => 16,
            _ => 8,
        };
        Self {
            dimension,
            points_per_axis: n,
            mode: QuadratureMode::default(),
        }
    }

    /// The grid with half as many points per axis, if it is still a valid grid.
    pub fn coarsened(&self) -> Option<Self> {
        let half = self.points_per_axis / 2;
        (half >= 4 && half % 2 == 0).then_some(Self {
            points_per_axis: half,
            ..*self
        })
    }

    pub fn refined(&self) -> Self {
        Self {
            points_per_axis: self.points_per_axis * 2,
            ..*self
        }
    }

    pub fn node_count(&self) -> usize {
        self.points_per_axis.pow(self.dimension as u32)
    }

    pub fn nodes_1d(&self) -> Vec<f64> {
        midpoint_nodes(self.points_per_axis)
    }
}

pub(crate) fn midpoint_nodes(n: usize) -> Vec<f64> {
    let h = 2.0 * PI / n as f64;
    (0..n).map(|j| -PI + (j as f64 + 0.5) * h).collect()
}

/// Symbol values on a midpoint grid, precomputed per axis when the kernel is
/// axis-separable.
enum SymbolEval<'a> {
    Separable(Vec<Vec<f64>>),
    General { jumps: &'a [Jump], nodes: Vec<f64> },
}

impl<'a> SymbolEval<'a> {
    fn new(kernel: &'a JumpKernel, n: usize) -> Self {
        let nodes = midpoint_nodes(n);
        match kernel.axis_factors() {
            Some(axes) => Self::Separable(
                axes.iter()
                    .map(|a| nodes.iter().map(|&k| a.symbol(k)).collect())
                    .collect(),
            ),
            None => Self::General {
                jumps: kernel.jumps(),
                nodes,
            },
        }
    }

    fn at(&self, idx: &[usize]) -> f64 {
        match self {
            Self::Separable(tables) => idx.iter().zip(tables).map(|(&j, t)| t[j]).sum(),
            Self::General { jumps, nodes } => jumps
                .iter()
                .map(|jump| {
                    let phase: f64 = jump
                        .z
                        .iter()
                        .zip(idx)
                        .map(|(&z, &j)| z as f64 * nodes[j])
                        .sum();
                    jump.rate * phase.cos()
                })
                .sum(),
        }
    }
}

/// `(2π)^{-d} ∫ f(â(k)) cos(k·x) dk` by the plain midpoint rule with `n` points per axis.
///
/// Summation runs in a fixed order (parallel over the first axis, then
/// reduced in index order), so results are bit-reproducible.
pub fn midpoint_sum<F>(kernel: &JumpKernel, n: usize, x: &[i64], f: F) -> f64
where
    F: Fn(f64) -> f64 + Sync,
{
    let d = kernel.dimension();
    assert_eq!(x.len(), d, "displacement dimension mismatch");
    let symbol = SymbolEval::new(kernel, n);
    let nodes = midpoint_nodes(n);
    let phases: Vec<Vec<(f64, f64)>> = x
        .iter()
        .map(|&xa| {
            nodes
                .iter()
                .map(|&k| {
                    let (s, c) = (k * xa as f64).sin_cos();
                    (c, s)
                })
                .collect()
        })
        .collect();
    let zero_shift = x.iter().all(|&c| c == 0);

    let partial: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j0| {
            let mut idx = vec![0usize; d];
            idx[0] = j0;
            let mut acc = 0.0;
            let inner = n.pow(d as u32 - 1);
            for flat in 0..inner {
                let mut rem = flat;
                for a in (1..d).rev() {
                    idx[a] = rem % n;
                    rem /= n;
                }
                let value = f(symbol.at(&idx));
                if zero_shift {
                    acc += value;
                } else {
                    // Re Π_a e^{i k_a x_a}
                    let (mut re, mut im) = (1.0, 0.0);
                    for (a, &j) in idx.iter().enumerate() {
                        let (c, s) = phases[a][j];
                        let nre = re * c - im * s;
                        im = re * s + im * c;
                        re = nre;
                    }
                    acc += value * re;
                }
            }
            acc
        })
        .collect();
    partial.iter().sum::<f64>() / (n as f64).powi(d as i32)
}

/// Values of `(2π)^{-d} ∫ f(â(k)) e^{ik·x} dk` for every `x` of the
/// `N^d` torus at once, via a multidimensional inverse FFT.
#[derive(Debug, Clone)]
pub struct TorusField {
    dimension: usize,
    n: usize,
    values: Vec<f64>,
}

impl TorusField {
    pub fn compute<F>(kernel: &JumpKernel, n: usize, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Sync,
    {
        let d = kernel.dimension();
        let total = n.pow(d as u32);
        let symbol = SymbolEval::new(kernel, n);
        let mut buf: Vec<Complex64> = (0..total)
            .into_par_iter()
            .map(|flat| {
                let idx = unflatten(flat, n, d);
                Complex64::new(f(symbol.at(&idx)), 0.0)
            })
            .collect();

        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_inverse(n);
        // axis a has stride n^(d-1-a) in row-major order
        for a in 0..d {
            let stride = n.pow((d - 1 - a) as u32);
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            for base in 0..total {
                if (base / stride) % n != 0 {
                    continue;
                }
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = buf[base + j * stride];
                }
                fft.process(&mut line);
                for (j, v) in line.iter().enumerate() {
                    buf[base + j * stride] = *v;
                }
            }
        }

        let h = 2.0 * PI / n as f64;
        let scale = 1.0 / total as f64;
        let values = (0..total)
            .map(|flat| {
                let idx = unflatten(flat, n, d);
                let shift: f64 = idx
                    .iter()
                    .map(|&j| (-PI + 0.5 * h) * signed_coord(j, n) as f64)
                    .sum();
                let phase = Complex64::from_polar(1.0, shift);
                (buf[flat] * phase).re * scale
            })
            .collect();
        Self {
            dimension: d,
            n,
            values,
        }
    }

    /// Value at displacement `x`; `None` unless every `|x_a| < N/2`.
    pub fn get(&self, x: &[i64]) -> Option<f64> {
        let half = (self.n / 2) as i64;
        if x.len() != self.dimension || x.iter().any(|&c| c >= half || c < -half) {
            return None;
        }
        let mut flat = 0;
        for &c in x {
            flat = flat * self.n + c.rem_euclid(self.n as i64) as usize;
        }
        Some(self.values[flat])
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    /// Iterates over `(x, value)` for all represented displacements.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<i64>, f64)> + '_ {
        (0..self.values.len()).map(move |flat| {
            let idx = unflatten(flat, self.n, self.dimension);
            let x = idx.iter().map(|&j| signed_coord(j, self.n)).collect();
            (x, self.values[flat])
        })
    }
}

fn unflatten(mut flat: usize, n: usize, d: usize) -> Vec<usize> {
    let mut idx = vec![0; d];
    for a in (0..d).rev() {
        idx[a] = flat % n;
        flat /= n;
    }
    idx
}

fn signed_coord(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}
