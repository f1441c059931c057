use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{JumpKernel, Point};
use crate::spectral::PerturbationField;

/// Default budget of scheduler iterations per replica.
pub const DEFAULT_EVENT_CAP: u64 = 10_000_000;
/// Default bound on live particles per replica.
pub const DEFAULT_PARTICLE_CAP: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    /// One particle on every site of `{-W..W}^d`.
    OnePerSite { half_width: usize },
    /// A single particle at the given site.
    Single { site: Point },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    /// The whole lattice.
    #[default]
    Open,
    /// The torus `{-W..W}^d` with coordinates taken modulo `2W + 1`.
    Periodic { half_width: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct SimConfig {
    pub kernel: JumpKernel,
    pub field: PerturbationField,
    pub init: InitMode,
    pub domain: Domain,
    pub checkpoints: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    /// Sites whose counts are recorded per replica.
    pub probes: Vec<Point>,
    /// Half-width of the cube `{-w..w}^d` used for occupancy and islands.
    pub observation_half_width: Option<usize>,
    pub event_cap: u64,
    pub particle_cap: usize,
}

impl SimConfig {
    /// A configuration with default caps, open domain, no observation window,
    /// and the origin as the only probe.
    pub fn new(
        kernel: JumpKernel,
        field: PerturbationField,
        init: InitMode,
        checkpoints: Vec<f64>,
        replicas: usize,
        seed: u64,
    ) -> Self {
        let d = kernel.dimension();
        Self {
            kernel,
            field,
            init,
            domain: Domain::Open,
            checkpoints,
            replicas,
            seed,
            probes: vec![vec![0; d]],
            observation_half_width: None,
            event_cap: DEFAULT_EVENT_CAP,
            particle_cap: DEFAULT_PARTICLE_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.kernel.dimension();
        self.field.check_dimension(d)?;
        if self.replicas == 0 {
            return Err(Error::InvalidInput(
                "at least one replica is required".into(),
            ));
        }
        if self.checkpoints.is_empty()
            || self
                .checkpoints
                .iter()
                .any(|t| !(*t >= 0.0 && t.is_finite()))
            || self.checkpoints.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidInput(
                "checkpoints must be nonnegative, finite, and strictly increasing".into(),
            ));
        }
        if self.probes.iter().any(|p| p.len() != d) {
            return Err(Error::InvalidInput(format!(
                "probe sites must have dimension {d}"
            )));
        }
        if let InitMode::Single { site } = &self.init {
            if site.len() != d {
                return Err(Error::InvalidInput(format!(
                    "initial site must have dimension {d}"
                )));
            }
        }
        if self.event_cap == 0 || self.particle_cap == 0 {
            return Err(Error::InvalidInput("caps must be positive".into()));
        }
        let coord_limit = i32::MAX as i64 / 4;
        let too_far = |p: &[i64]| p.iter().any(|c| c.abs() > coord_limit);
        if self.probes.iter().any(|p| too_far(p))
            || self.field.sources().iter().any(|s| too_far(&s.site))
        {
            return Err(Error::InvalidInput(
                "sites exceed the simulator coordinate range".into(),
            ));
        }
        if let Domain::Periodic { half_width } = self.domain {
            let side = 2 * half_width + 1;
            if side <= 2 * self.kernel.range() as usize {
                return Err(Error::InvalidInput(
                    "periodic box is narrower than the jump range".into(),
                ));
            }
            let inside = |p: &[i64]| p.iter().all(|c| c.unsigned_abs() as usize <= half_width);
            if let InitMode::OnePerSite { half_width: w } = self.init {
                if w > half_width {
                    return Err(Error::InvalidInput(
                        "initial window exceeds the periodic box".into(),
                    ));
                }
            }
            if let InitMode::Single { site } = &self.init {
                if !inside(site) {
                    return Err(Error::InvalidInput(
                        "initial site outside the periodic box".into(),
                    ));
                }
            }
            if self.probes.iter().any(|p| !inside(p))
                || self.field.sources().iter().any(|s| !inside(&s.site))
            {
                return Err(Error::InvalidInput(
                    "probes and sources must lie in the periodic box".into(),
                ));
            }
            if self.observation_half_width.is_some_and(|w| w > half_width) {
                return Err(Error::InvalidInput(
                    "observation window exceeds the periodic box".into(),
                ));
            }
        }
        if let Some(w) = self.observation_half_width {
            let volume = ((2 * w + 1) as f64).powi(d as i32);
            if volume > 1e8 {
                return Err(Error::InvalidInput(
                    "observation window is too large".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Seed of replica `r`: a SplitMix64 mix of the master seed and the index.
pub fn replica_seed(master: u64, replica: u64) -> u64 {
    splitmix(master ^ splitmix(replica.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> SimConfig {
        SimConfig::new(
            JumpKernel::named("srw-d1").unwrap(),
            PerturbationField::unperturbed(1.0).unwrap(),
            InitMode::Single { site: vec![0] },
            vec![1.0, 2.0],
            10,
            7,
        )
    }

    #[test]
    fn rejects_zero_replicas_and_bad_checkpoints() {
        let mut c = base();
        assert!(c.validate().is_ok());
        c.replicas = 0;
        assert!(c.validate().is_err());
        let mut c = base();
        c.checkpoints = vec![2.0, 1.0];
        assert!(c.validate().is_err());
    }

    #[test]
    fn seeds_differ_across_replicas() {
        let seeds: Vec<u64> = (0..1000).map(|r| replica_seed(42, r)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), seeds.len());
        assert_ne!(replica_seed(1, 0), replica_seed(2, 0));
    }
}
