//! Event loop for one replica.
//!
//! Every particle carries three exponential clocks: jump at rate 1, split at
//! rate `β(x)`, death at rate `μ`. The loop draws candidate events at the
//! uniform rate `N · r_max` and accepts a candidate at particle `j` with
//! probability `r_j / r_max` (thinning), which is exact in law and costs
//! O(1) per event.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;

use super::config::{replica_seed, Domain, InitMode, SimConfig};
use super::observe::{observe, Observation};
use crate::kernels::Point;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EventCounts {
    pub jumps: u64,
    pub splits: u64,
    pub deaths: u64,
    /// Rejected candidates of the thinning step.
    pub null: u64,
}

impl EventCounts {
    pub fn real(&self) -> u64 {
        self.jumps + self.splits + self.deaths
    }
}

/// State of one replica at a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub population: u64,
    /// `n(t, y)` at each configured probe site.
    pub probe_counts: Vec<u64>,
    pub observation: Option<Observation>,
    /// Occupied sites and their counts, sorted; only kept on request.
    pub field: Option<Vec<(Point, u64)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Truncation {
    EventCap { t: f64 },
    ParticleCap { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaResult {
    pub replica: u64,
    pub seed: u64,
    /// One entry per checkpoint reached; shorter than the checkpoint list
    /// only when the run was truncated.
    pub snapshots: Vec<Snapshot>,
    pub events: EventCounts,
    /// `∫ Σ_j r_j dt` over the run; its expectation equals the expected
    /// number of real events.
    pub integrated_rate: f64,
    /// Running `Σ_j r_j` when the run stopped.
    pub total_rate: f64,
    pub truncated: Option<Truncation>,
}

pub(crate) struct Engine<'a> {
    config: &'a SimConfig,
    d: usize,
    jumps: Vec<i32>,
    jump_pick: JumpPick,
    sources: Vec<(Vec<i32>, f64)>,
    mu: f64,
    r_max: f64,
    period: Option<(i32, i32)>,
}

enum JumpPick {
    Uniform(usize),
    Weighted(WeightedIndex<f64>),
}

impl<'a> Engine<'a> {
    pub(crate) fn new(config: &'a SimConfig) -> Self {
        let d = config.kernel.dimension();
        let jumps: Vec<i32> = config
            .kernel
            .jumps()
            .iter()
            .flat_map(|j| j.z.iter().map(|&c| c as i32))
            .collect();
        let rates: Vec<f64> = config.kernel.jumps().iter().map(|j| j.rate).collect();
        let jump_pick = if rates.iter().all(|&r| r == rates[0]) {
            JumpPick::Uniform(rates.len())
        } else {
            JumpPick::Weighted(WeightedIndex::new(&rates).expect("validated kernel rates"))
        };
        let sources: Vec<(Vec<i32>, f64)> = config
            .field
            .sources()
            .iter()
            .map(|s| (s.site.iter().map(|&c| c as i32).collect(), s.sigma))
            .collect();
        let mu = config.field.mu();
        let v_max = sources.iter().map(|s| s.1).fold(0.0, f64::max);
        let period = match config.domain {
            Domain::Open => None,
            Domain::Periodic { half_width } => Some((half_width as i32, 2 * half_width as i32 + 1)),
        };
        Self {
            config,
            d,
            jumps,
            jump_pick,
            sources,
            mu,
            r_max: 1.0 + 2.0 * mu + v_max,
            period,
        }
    }

    fn potential(&self, x: &[i32]) -> f64 {
        self.sources.iter().filter(|s| s.0 == x).map(|s| s.1).sum()
    }

    fn rate(&self, x: &[i32]) -> f64 {
        1.0 + 2.0 * self.mu + self.potential(x)
    }

    fn initial_positions(&self) -> Vec<i32> {
        match &self.config.init {
            InitMode::Single { site } => site.iter().map(|&c| c as i32).collect(),
            InitMode::OnePerSite { half_width } => {
                let w = *half_width as i32;
                let side = 2 * w + 1;
                let count = (side as usize).pow(self.d as u32);
                let mut pos = Vec::with_capacity(count * self.d);
                for mut flat in 0..count {
                    let start = pos.len();
                    pos.resize(start + self.d, 0);
                    for a in (0..self.d).rev() {
                        pos[start + a] = (flat % side as usize) as i32 - w;
                        flat /= side as usize;
                    }
                }
                pos
            }
        }
    }

    pub(crate) fn run(&self, replica: u64, keep_fields: bool) -> ReplicaResult {
        let seed = replica_seed(self.config.seed, replica);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.d;
        let mut pos = self.initial_positions();
        let mut total_rate: f64 = pos.chunks(d).map(|x| self.rate(x)).sum();
        let mut events = EventCounts::default();
        let mut integrated_rate = 0.0;
        let mut snapshots = Vec::with_capacity(self.config.checkpoints.len());
        let mut truncated = None;
        let mut t = 0.0;
        let mut scratch = vec![0i32; d];
        let has_sources = !self.sources.is_empty();
        let uniform_rate = self.rate(&vec![0; d]);

        'checkpoints: for &checkpoint in &self.config.checkpoints {
            loop {
                let n = pos.len() / d;
                if n == 0 {
                    break;
                }
                let candidate_rate = n as f64 * self.r_max;
                let wait: f64 = rng.sample::<f64, _>(Exp1) / candidate_rate;
                if t + wait > checkpoint {
                    // memorylessness: discard the overshoot and redraw later
                    integrated_rate += total_rate * (checkpoint - t);
                    break;
                }
                t += wait;
                integrated_rate += total_rate * wait;
                if events.real() + events.null >= self.config.event_cap {
                    truncated = Some(Truncation::EventCap { t });
                    break 'checkpoints;
                }
                let j = rng.gen_range(0..n);
                let x = &pos[j * d..(j + 1) * d];
                let beta_here = if has_sources {
                    self.mu + self.potential(x)
                } else {
                    self.mu
                };
                let r_here = 1.0 + beta_here + self.mu;
                let u: f64 = rng.gen::<f64>() * self.r_max;
                if u < 1.0 {
                    let k = match &self.jump_pick {
                        JumpPick::Uniform(m) => rng.gen_range(0..*m),
                        JumpPick::Weighted(w) => w.sample(&mut rng),
                    };
                    for a in 0..d {
                        let mut c = pos[j * d + a] + self.jumps[k * d + a];
                        if let Some((w, side)) = self.period {
                            if c > w {
                                c -= side;
                            } else if c < -w {
                                c += side;
                            }
                        }
                        scratch[a] = c;
                    }
                    if has_sources {
                        total_rate += self.rate(&scratch) - r_here;
                    }
                    pos[j * d..(j + 1) * d].copy_from_slice(&scratch);
                    events.jumps += 1;
                } else if u < 1.0 + beta_here {
                    scratch.copy_from_slice(&pos[j * d..(j + 1) * d]);
                    pos.extend_from_slice(&scratch);
                    total_rate += r_here;
                    events.splits += 1;
                    if pos.len() / d > self.config.particle_cap {
                        truncated = Some(Truncation::ParticleCap { t });
                        break 'checkpoints;
                    }
                } else if u < r_here {
                    let last = pos.len() - d;
                    if j * d != last {
                        let (head, tail) = pos.split_at_mut(last);
                        head[j * d..(j + 1) * d].copy_from_slice(tail);
                    }
                    pos.truncate(last);
                    total_rate -= r_here;
                    events.deaths += 1;
                } else {
                    events.null += 1;
                }
                if !has_sources {
                    // keep the running sum exact when all rates are equal
                    total_rate = (pos.len() / d) as f64 * uniform_rate;
                }
            }
            t = checkpoint;
            snapshots.push(self.snapshot(t, &pos, keep_fields));
        }
        ReplicaResult {
            replica,
            seed,
            snapshots,
            events,
            integrated_rate,
            total_rate,
            truncated,
        }
    }

    fn snapshot(&self, t: f64, pos: &[i32], keep_fields: bool) -> Snapshot {
        let d = self.d;
        let probes: Vec<Vec<i32>> = self
            .config
            .probes
            .iter()
            .map(|p| p.iter().map(|&c| c as i32).collect())
            .collect();
        let mut probe_counts = vec![0u64; probes.len()];
        for x in pos.chunks(d) {
            for (k, p) in probes.iter().enumerate() {
                if x == p.as_slice() {
                    probe_counts[k] += 1;
                }
            }
        }
        let observation = self
            .config
            .observation_half_width
            .map(|w| observe(pos, d, w));
        let field = keep_fields.then(|| {
            let mut sites: Vec<Point> = pos
                .chunks(d)
                .map(|x| x.iter().map(|&c| c as i64).collect())
                .collect();
            sites.sort_unstable();
            let mut out: Vec<(Point, u64)> = Vec::new();
            for s in sites {
                match out.last_mut() {
                    Some((last, n)) if *last == s => *n += 1,
                    _ => out.push((s, 1)),
                }
            }
            out
        });
        Snapshot {
            t,
            population: (pos.len() / d) as u64,
            probe_counts,
            observation,
            field,
        }
    }

    /// `Σ_j r_j` recomputed from scratch, for invariant checks.
    #[cfg(test)]
    pub(crate) fn total_rate_of(&self, pos: &[i32]) -> f64 {
        pos.chunks(self.d).map(|x| self.rate(x)).sum()
    }
}
