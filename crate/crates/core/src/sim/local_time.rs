//! Monte Carlo for the Feynman–Kac functional `E₀ exp(Σ σ_i ℓ_{x_i}(t))`.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use super::config::replica_seed;
use super::stats::mean_and_se;
use crate::error::{Error, Result};
use crate::kernels::JumpKernel;
use crate::spectral::Source;

/// Relative 95% half-width above which the estimate is flagged as heavy-tailed.
pub const HEAVY_TAIL_REL_CI: f64 = 0.05;

/// Time spent at the sources by one path up to `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalTimeSample {
    pub seed: u64,
    pub t: f64,
    /// `ℓ_{x_i}(t)` per source.
    pub local_times: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalTimeEstimate {
    pub t: f64,
    pub paths: usize,
    pub mean: f64,
    pub std_err: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub heavy_tail: bool,
}

/// Local times at `times` (nondecreasing) of the path with seed `seed`.
/// Holding times are exponential, so sojourns are accumulated exactly.
pub fn local_time_path(
    kernel: &JumpKernel,
    sources: &[Source],
    times: &[f64],
    seed: u64,
) -> Result<Vec<LocalTimeSample>> {
    check(kernel, sources)?;
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || times.windows(2).any(|w| w[1] < w[0])
    {
        return Err(Error::InvalidInput(
            "times must be nonnegative and nondecreasing".into(),
        ));
    }
    let walker = Walker::new(kernel);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0i64; kernel.dimension()];
    let mut ell = vec![0.0; sources.len()];
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    // the current holding interval is [now, now + hold)
    let mut hold: f64 = rng.sample(Exp1);
    for &t in times {
        while now + hold <= t {
            credit(&mut ell, sources, &x, hold);
            now += hold;
            walker.step(&mut x, &mut rng);
            hold = rng.sample(Exp1);
        }
        let partial = t - now;
        credit(&mut ell, sources, &x, partial);
        now = t;
        hold -= partial;
        out.push(LocalTimeSample {
            seed,
            t,
            local_times: ell.clone(),
        });
    }
    Ok(out)
}

/// Averages `exp(Σ σ_i ℓ_{x_i}(t))` over `paths` walks from the origin; path
/// `r` is seeded with the replica seed of `(seed, r)`.
pub fn local_time_mc(
    kernel: &JumpKernel,
    sources: &[Source],
    t: f64,
    paths: usize,
    seed: u64,
) -> Result<LocalTimeEstimate> {
    check(kernel, sources)?;
    if paths < 2 {
        return Err(Error::InvalidInput("need at least two paths".into()));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "time must be finite and nonnegative, got {t}"
        )));
    }
    let walker = Walker::new(kernel);
    let values: Vec<f64> = (0..paths as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(replica_seed(seed, r));
            let mut x = vec![0i64; kernel.dimension()];
            let mut exponent = 0.0;
            let mut now = 0.0;
            loop {
                let hold: f64 = rng.sample(Exp1);
                let dwell = hold.min(t - now);
                exponent += dwell
                    * sources
                        .iter()
                        .filter(|s| s.site == x)
                        .map(|s| s.sigma)
                        .sum::<f64>();
                now += hold;
                if now >= t {
                    break;
                }
                walker.step(&mut x, &mut rng);
            }
            exponent.exp()
        })
        .collect();
    let (mean, std_err) = mean_and_se(&values);
    let half = 1.96 * std_err;
    Ok(LocalTimeEstimate {
        t,
        paths,
        mean,
        std_err,
        ci_lo: mean - half,
        ci_hi: mean + half,
        heavy_tail: half > HEAVY_TAIL_REL_CI * mean,
    })
}

fn check(kernel: &JumpKernel, sources: &[Source]) -> Result<()> {
    if sources.iter().any(|s| s.site.len() != kernel.dimension()) {
        return Err(Error::InvalidInput(
            "source sites do not match the kernel dimension".into(),
        ));
    }
    Ok(())
}

fn credit(ell: &mut [f64], sources: &[Source], x: &[i64], dt: f64) {
    for (l, s) in ell.iter_mut().zip(sources) {
        if s.site == x {
            *l += dt;
        }
    }
}

struct Walker<'a> {
    kernel: &'a JumpKernel,
    pick: WeightedIndex<f64>,
}

impl<'a> Walker<'a> {
    fn new(kernel: &'a JumpKernel) -> Self {
        let pick =
            WeightedIndex::new(kernel.jumps().iter().map(|j| j.rate)).expect("validated kernel");
        Self { kernel, pick }
    }

    fn step(&self, x: &mut [i64], rng: &mut ChaCha8Rng) {
        let z = &self.kernel.jumps()[self.pick.sample(rng)].z;
        for (c, dz) in x.iter_mut().zip(z) {
            *c += dz;
        }
    }
}
