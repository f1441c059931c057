use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Point;

/// A point source: extra branching rate `sigma` at `site`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub site: Point,
    pub sigma: f64,
}

/// Branching rate `β(x) = μ + Σ σ_i δ_{x_i}(x)` against death rate `μ`.
///
/// The potential `V = β − μ` is the sum of point sources.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationField {
    mu: f64,
    sources: Vec<Source>,
}

impl PerturbationField {
    /// `mu = 0` is accepted so that pure random walks (no branching) can be
    /// expressed with the same type.
    pub fn new(mu: f64, sources: Vec<Source>) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "mu must be finite and nonnegative, got {mu}"
            )));
        }
        for (i, s) in sources.iter().enumerate() {
            if !(s.sigma > 0.0 && s.sigma.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "source strength must be positive, got {} at {:?}",
                    s.sigma, s.site
                )));
            }
            if sources[..i].iter().any(|o| o.site == s.site) {
                return Err(Error::InvalidInput(format!(
                    "duplicate source site {:?}",
                    s.site
                )));
            }
            if s.site.len() != sources[0].site.len() {
                return Err(Error::InvalidInput(
                    "source sites differ in dimension".into(),
                ));
            }
        }
        Ok(Self { mu, sources })
    }

    /// One source of strength `sigma` at the origin of `Z^d`.
    pub fn single(dimension: usize, mu: f64, sigma: f64) -> Result<Self> {
        Self::new(
            mu,
            vec![Source {
                site: vec![0; dimension],
                sigma,
            }],
        )
    }

    /// The critical unperturbed field `β = μ`.
    pub fn unperturbed(mu: f64) -> Result<Self> {
        Self::new(mu, Vec::new())
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sources(&self) -> &[Source] {
        &self.sources
    }

    pub fn sigma_total(&self) -> f64 {
        self.sources.iter().map(|s| s.sigma).sum()
    }

    /// `V(x) = β(x) − μ`.
    pub fn potential(&self, x: &[i64]) -> f64 {
        self.sources
            .iter()
            .filter(|s| s.site == x)
            .map(|s| s.sigma)
            .sum()
    }

    /// Branching rate `β(x)`.
    pub fn beta(&self, x: &[i64]) -> f64 {
        self.mu + self.potential(x)
    }

    pub fn check_dimension(&self, d: usize) -> Result<()> {
        match self.sources.first() {
            Some(s) if s.site.len() != d => Err(Error::InvalidInput(format!(
                "source sites have dimension {}, kernel has {d}",
                s.site.len()
            ))),
            _ => Ok(()),
        }
    }
}
