//! Across-replica estimators.

use rayon::prelude::*;
use serde::Serialize;

use super::config::SimConfig;
use super::engine::{Engine, ReplicaResult, Snapshot};
use crate::error::{Error, Result};
use crate::kernels::Point;

/// Replicas with a nonzero sample needed before a factorial moment is trusted.
pub const MIN_NONZERO_SAMPLES: usize = 100;
/// Replicas needed before a histogram is trusted.
pub const MIN_HISTOGRAM_REPLICAS: usize = 500;

#[derive(Debug, Clone, Serialize)]
pub struct SimStats {
    pub seed: u64,
    pub checkpoints: Vec<f64>,
    pub probes: Vec<Point>,
    /// In replica-index order.
    pub replicas: Vec<ReplicaResult>,
}

/// Runs every replica (in parallel) and collects the results in index order.
pub fn simulate(config: &SimConfig, keep_fields: bool) -> Result<SimStats> {
    config.validate()?;
    let engine = Engine::new(config);
    let replicas: Vec<ReplicaResult> = (0..config.replicas as u64)
        .into_par_iter()
        .map(|r| engine.run(r, keep_fields))
        .collect();
    Ok(SimStats {
        seed: config.seed,
        checkpoints: config.checkpoints.clone(),
        probes: config.probes.clone(),
        replicas,
    })
}

/// A single replica, as `simulate` would run it.
pub fn run_field(config: &SimConfig, replica: u64, keep_fields: bool) -> Result<ReplicaResult> {
    config.validate()?;
    Ok(Engine::new(config).run(replica, keep_fields))
}

impl SimStats {
    /// Snapshots at checkpoint `j` from replicas that reached it.
    pub fn at(&self, j: usize) -> impl Iterator<Item = &Snapshot> + '_ {
        self.replicas.iter().filter_map(move |r| r.snapshots.get(j))
    }

    pub fn truncated_replicas(&self) -> usize {
        self.replicas
            .iter()
            .filter(|r| r.truncated.is_some())
            .count()
    }

    fn probe_samples(&self, j: usize, probe: usize) -> Vec<u64> {
        self.at(j).map(|s| s.probe_counts[probe]).collect()
    }

    pub fn probe_summary(&self, j: usize, probe: usize) -> ProbeSummary {
        let samples = self.probe_samples(j, probe);
        let values: Vec<f64> = samples.iter().map(|&n| n as f64).collect();
        let (mean, std_err) = mean_and_se(&values);
        let empty: Vec<f64> = samples
            .iter()
            .map(|&n| if n == 0 { 1.0 } else { 0.0 })
            .collect();
        let (p_empty, p_empty_se) = mean_and_se(&empty);
        ProbeSummary {
            t: self.checkpoints[j],
            probe: self.probes[probe].clone(),
            replicas: samples.len(),
            mean,
            std_err,
            p_empty,
            p_empty_se,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeSummary {
    pub t: f64,
    pub probe: Point,
    pub replicas: usize,
    pub mean: f64,
    pub std_err: f64,
    /// Empirical `P(n(t, y) = 0)`.
    pub p_empty: f64,
    pub p_empty_se: f64,
}

/// Sample mean and its standard error.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentEstimate {
    pub t: f64,
    pub probe: Point,
    pub order: usize,
    pub mean: f64,
    pub std_err: f64,
    /// Normal-approximation 95% interval.
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub nonzero_samples: usize,
    pub low_confidence: bool,
}

/// Unbiased estimates of `E n(n−1)···(n−l+1)` for `l = 1..=max_order` at
/// every checkpoint and probe.
pub fn estimate_moments(stats: &SimStats, max_order: usize) -> Result<Vec<MomentEstimate>> {
    if stats.replicas.len() < 2 {
        return Err(Error::InvalidInput(
            "moment estimates need at least two replicas".into(),
        ));
    }
    let mut out = Vec::new();
    for j in 0..stats.checkpoints.len() {
        for probe in 0..stats.probes.len() {
            let samples = stats.probe_samples(j, probe);
            for order in 1..=max_order {
                let values: Vec<f64> = samples
                    .iter()
                    .map(|&n| falling_factorial(n, order))
                    .collect();
                let nonzero_samples = values.iter().filter(|&&v| v != 0.0).count();
                let (mean, std_err) = mean_and_se(&values);
                let low_confidence = order >= 2 && nonzero_samples < MIN_NONZERO_SAMPLES;
                out.push(MomentEstimate {
                    t: stats.checkpoints[j],
                    probe: stats.probes[probe].clone(),
                    order,
                    mean,
                    std_err,
                    ci_lo: mean - 1.96 * std_err,
                    ci_hi: mean + 1.96 * std_err,
                    nonzero_samples,
                    low_confidence,
                });
            }
        }
    }
    Ok(out)
}

fn falling_factorial(n: u64, order: usize) -> f64 {
    (0..order as u64)
        .map(|i| n.saturating_sub(i) as f64)
        .product()
}

#[derive(Debug, Clone, Serialize)]
pub struct OccupancyRow {
    pub t: f64,
    pub replicas: usize,
    pub occupied_fraction: f64,
    pub occupied_fraction_se: f64,
    pub mean_islands: f64,
    pub mean_island_size: f64,
    pub mean_largest_island: f64,
    /// Empirical `P(n(t, y) = 0)` per probe.
    pub p_empty: Vec<f64>,
    pub p_empty_se: Vec<f64>,
}

/// Occupancy and island diagnostics per checkpoint; needs an observation window.
pub fn occupancy_stats(stats: &SimStats) -> Result<Vec<OccupancyRow>> {
    let mut rows = Vec::with_capacity(stats.checkpoints.len());
    for j in 0..stats.checkpoints.len() {
        let observations: Vec<_> = stats.at(j).map(|s| s.observation.as_ref()).collect();
        if observations.iter().any(|o| o.is_none()) {
            return Err(Error::InvalidInput(
                "simulation ran without an observation window".into(),
            ));
        }
        let obs: Vec<_> = observations.into_iter().flatten().collect();
        let fractions: Vec<f64> = obs.iter().map(|o| o.occupied_fraction()).collect();
        let (occupied_fraction, occupied_fraction_se) = mean_and_se(&fractions);
        let avg = |f: &dyn Fn(&super::observe::Observation) -> f64| {
            obs.iter().map(|o| f(o)).sum::<f64>() / obs.len().max(1) as f64
        };
        let (p_empty, p_empty_se) = (0..stats.probes.len())
            .map(|k| stats.probe_summary(j, k))
            .map(|s| (s.p_empty, s.p_empty_se))
            .unzip();
        rows.push(OccupancyRow {
            t: stats.checkpoints[j],
            replicas: obs.len(),
            occupied_fraction,
            occupied_fraction_se,
            mean_islands: avg(&|o| o.islands as f64),
            mean_island_size: avg(&|o| o.mean_island_size()),
            mean_largest_island: avg(&|o| o.largest_island as f64),
            p_empty,
            p_empty_se,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub t: f64,
    pub probe: Point,
    pub replicas: usize,
    /// `counts[n]` replicas had `n(t, y) = n`.
    pub counts: Vec<u64>,
    /// Total-variation distance to the histogram at `2t`, when that
    /// checkpoint exists.
    pub tv_to_double: Option<f64>,
    pub low_confidence: bool,
}

pub fn distribution_snapshot(stats: &SimStats, probe: usize, t_index: usize) -> Result<Histogram> {
    if probe >= stats.probes.len() || t_index >= stats.checkpoints.len() {
        return Err(Error::InvalidInput(
            "probe or checkpoint index out of range".into(),
        ));
    }
    let counts = histogram(&stats.probe_samples(t_index, probe));
    let t = stats.checkpoints[t_index];
    let doubled = stats
        .checkpoints
        .iter()
        .position(|&s| (s - 2.0 * t).abs() <= 1e-9 * t.max(1.0));
    let tv_to_double = doubled.filter(|_| t > 0.0).map(|k| {
        let other = histogram(&stats.probe_samples(k, probe));
        total_variation(&counts, &other)
    });
    let replicas = counts.iter().sum::<u64>() as usize;
    Ok(Histogram {
        t,
        probe: stats.probes[probe].clone(),
        replicas,
        counts,
        tv_to_double,
        low_confidence: replicas < MIN_HISTOGRAM_REPLICAS,
    })
}

fn histogram(samples: &[u64]) -> Vec<u64> {
    let max = samples.iter().copied().max().unwrap_or(0) as usize;
    let mut h = vec![0u64; max + 1];
    for &n in samples {
        h[n as usize] += 1;
    }
    h
}

/// `½ Σ |p_n − q_n|` between two normalized histograms.
pub fn total_variation(a: &[u64], b: &[u64]) -> f64 {
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let len = a.len().max(b.len());
    0.5 * (0..len)
        .map(|i| {
            let p = a.get(i).copied().unwrap_or(0) as f64 / na;
            let q = b.get(i).copied().unwrap_or(0) as f64 / nb;
            (p - q).abs()
        })
        .sum::<f64>()
}
