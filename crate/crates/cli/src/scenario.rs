//! Scenario files: flat top-level keys plus one optional section per experiment.
//!
//! ```toml
//! kernel = "srw-d3"
//! experiment = "moments"
//! sigma = 0.3
//! mu = 1.0
//!
//! [moments]
//! t_end = 20.0
//! max_order = 3
//! ```

use std::path::{Path, PathBuf};

use brwlab_core::kernels::{is_transient, Jump, JumpKernel, Point, QuadratureMode, TorusGrid};
use brwlab_core::moments::{default_dt, Boundary, LatticeBox};
use brwlab_core::sim::{Domain, InitMode, SimConfig, DEFAULT_EVENT_CAP, DEFAULT_PARTICLE_CAP};
use brwlab_core::spectral::{PerturbationField, Source};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Kernels,
    Spectral,
    Moments,
    Simulate,
    Sweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Kernels => "kernels",
            Self::Spectral => "spectral",
            Self::Moments => "moments",
            Self::Simulate => "simulate",
            Self::Sweep => "sweep",
        }
    }
}

/// `fast` uses the default quadrature grids and no step halving; `strict`
/// doubles the grid, halves the default time step and turns step halving on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ToleranceProfile {
    #[default]
    Fast,
    Strict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpRow {
    pub z: Point,
    pub rate: f64,
}

/// Kernel given inline, or loaded from a file with the same two keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelTable {
    pub dimension: usize,
    pub jumps: Vec<JumpRow>,
}

/// A built-in name (`srw-d3`), a path to a kernel file, or an inline table.
/// Paths are replaced by the file's contents when the scenario is loaded,
/// so the echoed scenario is self-contained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelSpec {
    Name(String),
    Inline(KernelTable),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct KernelsSection {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambdas: Vec<f64>,
    /// Evaluation points `y`; the source point is the origin.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transience_grids: Vec<usize>,
    /// Radii for the `G₀(0, x)` power-law fit; transient kernels only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub asymptote_radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SigmaRange {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SpectralSection {
    /// Single-source strengths to sweep; empty means "use the scenario field".
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sigma_values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_range: Option<SigmaRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureMode>,
    /// Half-widths `L` of the cubes for the principal Dirichlet eigenvalue.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub box_half_widths: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Initial {
    /// `m_l(0, x) = δ(x − y₀)`; all orders up to `max_order`.
    #[default]
    Delta,
    /// One particle per site; first moment only.
    Ones,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MomentsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Boundary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Initial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Number of equally spaced checkpoints after `t = 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Point>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_check: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_radius: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_halving: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dl_terms: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    #[default]
    OnePerSite,
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    #[default]
    Open,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitKind>,
    /// Half-width `W` of the initially occupied cube.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_site: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checkpoints: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation_half_width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_cap: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particle_cap: Option<usize>,
    /// Write per-replica snapshots (with the full occupation field) as JSON lines.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_moment_order: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sigma_values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_range: Option<SigmaRange>,
    /// Grids for the `I(0)` convergence study.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub grids: Vec<usize>,
    /// When set, each σ also gets a first-moment ODE run on a box of this
    /// half-width, reporting `m₁(t_end, 0)` and its late-time log-slope.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ode_half_width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kernel: KernelSpec,
    pub experiment: Experiment,
    /// Strength of a single source at the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Sources as `"x1,x2,...:sigma"`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sources: Vec<String>,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub tolerance_profile: ToleranceProfile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernels: Option<KernelsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

fn default_mu() -> f64 {
    1.0
}

fn default_seed() -> u64 {
    1
}

/// Reads, parses, resolves kernel files and fills defaults; the result has
/// passed [`Scenario::validate`].
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let table = parse_table(&text, path)?;
    scenario_from_table(table, path.parent())
}

/// Parses TOML text into a raw table, reporting line and column on failure.
pub fn parse_table(text: &str, path: &Path) -> Result<toml::Table> {
    text.parse::<toml::Table>()
        .map_err(|e| parse_error(text, path, &e))
}

/// Deserializes a (possibly flag-amended) raw table into a validated scenario.
pub fn scenario_from_table(table: toml::Table, base: Option<&Path>) -> Result<Scenario> {
    let text = toml::to_string(&table).map_err(|e| CliError::Validation(e.to_string()))?;
    let mut scenario: Scenario =
        toml::from_str(&text).map_err(|e| parse_error(&text, Path::new("<scenario>"), &e))?;
    scenario.resolve_kernel_file(base)?;
    scenario.fill_defaults()?;
    scenario.validate()?;
    Ok(scenario)
}

fn parse_error(text: &str, path: &Path, e: &toml::de::Error) -> CliError {
    let (line, column) = match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            (line, column)
        }
        None => (0, 0),
    };
    CliError::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: e.message().to_string(),
    }
}

pub fn parse_point(text: &str) -> Result<Point> {
    text.split(',')
        .map(|c| c.trim().parse::<i64>())
        .collect::<std::result::Result<Point, _>>()
        .map_err(|_| CliError::Validation(format!("invalid lattice point {text:?}")))
}

pub fn parse_source(text: &str) -> Result<Source> {
    let (site, sigma) = text.rsplit_once(':').ok_or_else(|| {
        CliError::Validation(format!(
            "source {text:?} must look like \"x1,...,xd:sigma\""
        ))
    })?;
    let sigma = sigma
        .trim()
        .parse::<f64>()
        .map_err(|_| CliError::Validation(format!("invalid source strength in {text:?}")))?;
    Ok(Source {
        site: parse_point(site)?,
        sigma,
    })
}

impl SigmaRange {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0
            && self.max >= self.min
            && self.min.is_finite()
            && self.max.is_finite())
        {
            return Err(CliError::Validation(
                "sigma_range needs min ≤ max and step > 0".into(),
            ));
        }
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        if n > 100_000 {
            return Err(CliError::Validation(
                "sigma_range has too many points".into(),
            ));
        }
        // rounding keeps 0.1 + 2·0.1 from printing as 0.30000000000000004
        Ok((0..n)
            .map(|i| round12(self.min + i as f64 * self.step))
            .collect())
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

fn sigma_list(values: &[f64], range: &Option<SigmaRange>) -> Result<Vec<f64>> {
    let mut out = values.to_vec();
    if let Some(r) = range {
        out.extend(r.values()?);
    }
    Ok(out)
}

impl Scenario {
    /// A scenario with only the required keys set.
    pub fn minimal(kernel: &str, experiment: Experiment) -> Self {
        Self {
            kernel: KernelSpec::Name(kernel.to_string()),
            experiment,
            sigma: None,
            sources: Vec::new(),
            mu: default_mu(),
            seed: default_seed(),
            tolerance_profile: ToleranceProfile::default(),
            out: None,
            kernels: None,
            spectral: None,
            moments: None,
            simulate: None,
            sweep: None,
        }
    }

    fn resolve_kernel_file(&mut self, base: Option<&Path>) -> Result<()> {
        let KernelSpec::Name(name) = &self.kernel else {
            return Ok(());
        };
        if JumpKernel::named(name).is_ok() {
            return Ok(());
        }
        let mut path = PathBuf::from(name);
        if path.is_relative() {
            if let Some(base) = base {
                path = base.join(path);
            }
        }
        if !path.is_file() {
            return Err(CliError::Validation(format!(
                "kernel {name:?} is neither a built-in name (srw-d1, srw-d2, srw-d3, srw-d5, ...) nor a readable file"
            )));
        }
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io {
            path: path.clone(),
            source: e,
        })?;
        let table: KernelTable =
            toml::from_str(&text).map_err(|e| parse_error(&text, &path, &e))?;
        self.kernel = KernelSpec::Inline(table);
        Ok(())
    }

    pub fn build_kernel(&self) -> Result<JumpKernel> {
        match &self.kernel {
            KernelSpec::Name(name) => Ok(JumpKernel::named(name)?),
            KernelSpec::Inline(t) => Ok(JumpKernel::new(
                t.dimension,
                t.jumps
                    .iter()
                    .map(|j| Jump {
                        z: j.z.clone(),
                        rate: j.rate,
                    })
                    .collect(),
            )?),
        }
    }

    pub fn build_field(&self, dimension: usize) -> Result<PerturbationField> {
        if self.sigma.is_some() && !self.sources.is_empty() {
            return Err(CliError::Validation(
                "give either sigma or sources, not both".into(),
            ));
        }
        let sources = match self.sigma {
            Some(s) => vec![Source {
                site: vec![0; dimension],
                sigma: s,
            }],
            None => self
                .sources
                .iter()
                .map(|s| parse_source(s))
                .collect::<Result<_>>()?,
        };
        for s in &sources {
            if !(s.sigma > 0.0) {
                return Err(CliError::Validation(format!(
                    "source strengths must satisfy sigma > 0, got {}",
                    s.sigma
                )));
            }
        }
        let field = PerturbationField::new(self.mu, sources)?;
        field.check_dimension(dimension)?;
        Ok(field)
    }

    pub fn grid(
        &self,
        dimension: usize,
        points: Option<usize>,
        mode: Option<QuadratureMode>,
    ) -> Result<TorusGrid> {
        let base = TorusGrid::default_for(dimension);
        let n = points.unwrap_or(match self.tolerance_profile {
            ToleranceProfile::Fast => base.points_per_axis,
            ToleranceProfile::Strict => base.points_per_axis * 2,
        });
        Ok(TorusGrid::with_mode(
            dimension,
            n,
            mode.unwrap_or_default(),
        )?)
    }

    fn strict(&self) -> bool {
        self.tolerance_profile == ToleranceProfile::Strict
    }

    /// Materializes the section of the chosen experiment with every default
    /// spelled out, so the manifest echo documents the run completely.
    pub fn fill_defaults(&mut self) -> Result<()> {
        let kernel = self.build_kernel()?;
        let d = kernel.dimension();
        let origin = vec![0i64; d];
        let field = self.build_field(d)?;
        let strict = self.strict();
        match self.experiment {
            Experiment::Kernels => {
                let s = self.kernels.get_or_insert_with(Default::default);
                if s.times.is_empty() {
                    s.times = vec![1.0, 4.0];
                }
                if s.lambdas.is_empty() {
                    s.lambdas = if is_transient(&kernel) {
                        vec![0.0, 0.1]
                    } else {
                        vec![0.1, 1.0]
                    };
                }
                if s.points.is_empty() {
                    let mut e1 = origin.clone();
                    e1[0] = 1;
                    s.points = vec![origin.clone(), e1];
                }
                if s.transience_grids.is_empty() {
                    s.transience_grids = vec![16, 32, 64];
                }
                if s.asymptote_radii.is_empty() && is_transient(&kernel) {
                    s.asymptote_radii = vec![4.0, 6.0, 8.0, 12.0, 16.0];
                }
            }
            Experiment::Spectral => {
                self.spectral.get_or_insert_with(Default::default);
            }
            Experiment::Moments => {
                let s = self.moments.get_or_insert_with(Default::default);
                let t_end = *s.t_end.get_or_insert(20.0);
                s.checkpoints.get_or_insert(20);
                let max_order = *s.max_order.get_or_insert(3);
                s.initial.get_or_insert_with(Initial::default);
                s.boundary.get_or_insert_with(Boundary::default);
                s.half_width
                    .get_or_insert_with(|| LatticeBox::default_half_width(t_end, &field));
                s.target.get_or_insert_with(|| origin.clone());
                if s.probes.is_empty() {
                    s.probes = vec![origin.clone()];
                }
                s.dt.get_or_insert_with(|| {
                    let dt = default_dt(&field, max_order, 1.0);
                    if strict {
                        dt / 2.0
                    } else {
                        dt
                    }
                });
                s.bound_check.get_or_insert(true);
                s.bound_tolerance.get_or_insert(1e-3);
                s.step_halving.get_or_insert(strict);
                s.dl_terms.get_or_insert(30);
            }
            Experiment::Simulate => {
                let s = self.simulate.get_or_insert_with(Default::default);
                let init = *s.init.get_or_insert_with(InitKind::default);
                if init == InitKind::OnePerSite {
                    s.window.get_or_insert(50);
                } else {
                    s.init_site.get_or_insert_with(|| origin.clone());
                }
                let domain = *s.domain.get_or_insert_with(DomainKind::default);
                if domain == DomainKind::Periodic && s.window.is_none() {
                    s.window = Some(50);
                }
                if s.checkpoints.is_empty() {
                    let t_end = *s.t_end.get_or_insert(10.0);
                    s.checkpoints = (1..=10).map(|j| round12(t_end * j as f64 / 10.0)).collect();
                }
                s.replicas.get_or_insert(100);
                if s.probes.is_empty() {
                    s.probes = vec![origin.clone()];
                }
                s.event_cap.get_or_insert(DEFAULT_EVENT_CAP);
                s.particle_cap.get_or_insert(DEFAULT_PARTICLE_CAP);
                s.snapshots.get_or_insert(false);
                s.max_moment_order.get_or_insert(2);
            }
            Experiment::Sweep => {
                let s = self.sweep.get_or_insert_with(Default::default);
                if s.sigma_values.is_empty() && s.sigma_range.is_none() {
                    s.sigma_range = Some(SigmaRange {
                        min: 0.1,
                        max: 1.0,
                        step: 0.1,
                    });
                }
                if s.grids.is_empty() {
                    s.grids = vec![16, 32, 64];
                }
                if s.ode_half_width.is_some() {
                    s.t_end.get_or_insert(100.0);
                }
            }
        }
        Ok(())
    }

    /// Checks every parameter against the preconditions of the module that
    /// will consume it, before any computation starts.
    pub fn validate(&self) -> Result<()> {
        let kernel = self.build_kernel()?;
        let d = kernel.dimension();
        let field = self.build_field(d)?;
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(CliError::Validation(format!(
                "mu must be finite and nonnegative, got {}",
                self.mu
            )));
        }
        let check_point = |p: &Point, what: &str| -> Result<()> {
            if p.len() != d {
                return Err(CliError::Validation(format!(
                    "{what} {p:?} must have dimension {d}"
                )));
            }
            Ok(())
        };
        match self.experiment {
            Experiment::Kernels => {
                let s = self.kernels.as_ref().expect("defaults filled");
                self.grid(d, s.grid, None)?;
                for &t in &s.times {
                    if !(t >= 0.0 && t.is_finite()) {
                        return Err(CliError::Validation(format!(
                            "times must be nonnegative, got {t}"
                        )));
                    }
                }
                for &l in &s.lambdas {
                    if !(l >= 0.0 && l.is_finite()) {
                        return Err(CliError::Validation(format!(
                            "lambdas must be nonnegative, got {l}"
                        )));
                    }
                }
                for p in &s.points {
                    check_point(p, "point")?;
                }
                if s.transience_grids.len() < 3 {
                    return Err(CliError::Validation(
                        "transience_grids needs at least three grids".into(),
                    ));
                }
                for &n in &s.transience_grids {
                    TorusGrid::new(d, n)?;
                }
            }
            Experiment::Spectral => {
                let s = self.spectral.as_ref().expect("defaults filled");
                self.grid(d, s.grid, s.quadrature)?;
                let sigmas = sigma_list(&s.sigma_values, &s.sigma_range)?;
                if sigmas.is_empty() && field.sigma_total() == 0.0 {
                    return Err(CliError::Validation(
                        "spectral needs sigma, sources or a sigma list".into(),
                    ));
                }
                for &sg in &sigmas {
                    if !(sg > 0.0 && sg.is_finite()) {
                        return Err(CliError::Validation(format!(
                            "sigma values must satisfy sigma > 0, got {sg}"
                        )));
                    }
                }
                for &l in &s.box_half_widths {
                    if l < 2 {
                        return Err(CliError::Validation(
                            "box half-widths must be at least 2".into(),
                        ));
                    }
                }
            }
            Experiment::Moments => {
                let s = self.moments.as_ref().expect("defaults filled");
                let lattice = self.moment_box()?;
                let t_end = s.t_end.unwrap();
                if !(t_end > 0.0 && t_end.is_finite()) {
                    return Err(CliError::Validation(format!(
                        "t_end must be positive, got {t_end}"
                    )));
                }
                if s.checkpoints.unwrap() == 0 {
                    return Err(CliError::Validation("checkpoints must be positive".into()));
                }
                let dt = s.dt.unwrap();
                if !(dt > 0.0 && dt.is_finite()) {
                    return Err(CliError::Validation(format!(
                        "dt must be positive, got {dt}"
                    )));
                }
                let order = s.max_order.unwrap();
                if !(1..=12).contains(&order) {
                    return Err(CliError::Validation(format!(
                        "max_order must be in 1..=12, got {order}"
                    )));
                }
                let target = s.target.as_ref().unwrap();
                check_point(target, "target")?;
                if lattice.index(target).is_none() {
                    return Err(CliError::Validation(format!(
                        "target {target:?} lies outside the box"
                    )));
                }
                for p in &s.probes {
                    check_point(p, "probe")?;
                    if lattice.index(p).is_none() {
                        return Err(CliError::Validation(format!(
                            "probe {p:?} lies outside the box"
                        )));
                    }
                }
                lattice.generator(&kernel, &field)?;
                if !(s.bound_tolerance.unwrap() >= 0.0) {
                    return Err(CliError::Validation(
                        "bound_tolerance must be nonnegative".into(),
                    ));
                }
                if s.dl_terms.unwrap() == 0 {
                    return Err(CliError::Validation("dl_terms must be positive".into()));
                }
            }
            Experiment::Simulate => {
                let s = self.simulate.as_ref().expect("defaults filled");
                if s.replicas == Some(0) {
                    return Err(CliError::Validation("replicas must be positive".into()));
                }
                self.sim_config()?.validate()?;
                if s.max_moment_order.unwrap() == 0 {
                    return Err(CliError::Validation(
                        "max_moment_order must be positive".into(),
                    ));
                }
            }
            Experiment::Sweep => {
                let s = self.sweep.as_ref().expect("defaults filled");
                let sigmas = sigma_list(&s.sigma_values, &s.sigma_range)?;
                if sigmas.is_empty() {
                    return Err(CliError::Validation(
                        "sweep needs at least one sigma".into(),
                    ));
                }
                for &sg in &sigmas {
                    if !(sg > 0.0 && sg.is_finite()) {
                        return Err(CliError::Validation(format!(
                            "sigma values must satisfy sigma > 0, got {sg}"
                        )));
                    }
                }
                for &n in &s.grids {
                    TorusGrid::new(d, n)?;
                }
                if let Some(r) = s.ode_half_width {
                    LatticeBox::new(d, r, Boundary::Absorbing)?;
                    let t = s.t_end.unwrap();
                    if !(t > 0.0 && t.is_finite()) {
                        return Err(CliError::Validation(format!(
                            "t_end must be positive, got {t}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn moment_box(&self) -> Result<LatticeBox> {
        let d = self.build_kernel()?.dimension();
        let s = self.moments.as_ref().expect("defaults filled");
        Ok(LatticeBox::new(
            d,
            s.half_width.unwrap(),
            s.boundary.unwrap(),
        )?)
    }

    pub fn moment_times(&self) -> Vec<f64> {
        let s = self.moments.as_ref().expect("defaults filled");
        let n = s.checkpoints.unwrap();
        let t_end = s.t_end.unwrap();
        (0..=n).map(|j| t_end * j as f64 / n as f64).collect()
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let kernel = self.build_kernel()?;
        let field = self.build_field(kernel.dimension())?;
        let s = self.simulate.as_ref().expect("defaults filled");
        let init = match s.init.unwrap() {
            InitKind::OnePerSite => InitMode::OnePerSite {
                half_width: s.window.unwrap(),
            },
            InitKind::Single => InitMode::Single {
                site: s.init_site.clone().unwrap(),
            },
        };
        let mut config = SimConfig::new(
            kernel,
            field,
            init,
            s.checkpoints.clone(),
            s.replicas.unwrap(),
            self.seed,
        );
        config.domain = match s.domain.unwrap() {
            DomainKind::Open => Domain::Open,
            DomainKind::Periodic => Domain::Periodic {
                half_width: s.window.unwrap(),
            },
        };
        config.probes = s.probes.clone();
        config.observation_half_width = s.observation_half_width;
        config.event_cap = s.event_cap.unwrap();
        config.particle_cap = s.particle_cap.unwrap();
        Ok(config)
    }

    pub fn spectral_sigmas(&self) -> Result<Vec<f64>> {
        let s = self.spectral.as_ref().expect("defaults filled");
        sigma_list(&s.sigma_values, &s.sigma_range)
    }

    pub fn sweep_sigmas(&self) -> Result<Vec<f64>> {
        let s = self.sweep.as_ref().expect("defaults filled");
        sigma_list(&s.sigma_values, &s.sigma_range)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self)
            .map_err(|e| CliError::Validation(format!("cannot serialize scenario: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load_str(text: &str) -> Result<Scenario> {
        scenario_from_table(parse_table(text, Path::new("test.toml"))?, None)
    }

    #[test]
    fn minimal_spectral_scenario_gets_defaults() {
        let s = load_str("kernel = \"srw-d3\"\nexperiment = \"spectral\"\nsigma = 0.3\n").unwrap();
        assert_eq!(s.mu, 1.0);
        assert_eq!(s.seed, 1);
        assert_eq!(s.tolerance_profile, ToleranceProfile::Fast);
        assert!(s.spectral.is_some());
        assert!(s.spectral_sigmas().unwrap().is_empty());
    }

    #[test]
    fn negative_sigma_is_rejected() {
        let err =
            load_str("kernel = \"srw-d3\"\nexperiment = \"spectral\"\nsigma = -0.1\n").unwrap_err();
        assert!(
            matches!(err, CliError::Validation(ref m) if m.contains("sigma > 0")),
            "{err}"
        );
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err =
            load_str("kernel = \"srw-d3\"\nexperiment = \"spectral\"\nsigmaa = 0.3\n").unwrap_err();
        assert!(
            matches!(err, CliError::Parse { ref message, .. } if message.contains("sigmaa")),
            "{err}"
        );
        let err = load_str(
            "kernel = \"srw-d3\"\nexperiment = \"moments\"\nsigma = 0.3\n[moments]\ntend = 3\n",
        )
        .unwrap_err();
        assert!(matches!(err, CliError::Parse { .. }), "{err}");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err =
            parse_table("kernel = \"srw-d3\"\nsigma = = 1\n", Path::new("x.toml")).unwrap_err();
        match err {
            CliError::Parse { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 1);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn sources_parse_and_conflict_with_sigma() {
        let s = load_str(
            "kernel = \"srw-d3\"\nexperiment = \"spectral\"\nsources = [\"0,0,0:0.15\", \"2,0,0:0.15\"]\n",
        )
        .unwrap();
        let f = s.build_field(3).unwrap();
        assert!((f.sigma_total() - 0.3).abs() < 1e-15);
        assert!(load_str("kernel = \"srw-d3\"\nexperiment = \"spectral\"\nsigma = 0.1\nsources = [\"0,0,0:0.1\"]\n")
            .is_err());
        assert!(load_str(
            "kernel = \"srw-d3\"\nexperiment = \"spectral\"\nsources = [\"0,0:0.1\"]\n"
        )
        .is_err());
    }

    #[test]
    fn simulate_with_zero_replicas_is_rejected() {
        let err =
            load_str("kernel = \"srw-d1\"\nexperiment = \"simulate\"\n[simulate]\nreplicas = 0\n")
                .unwrap_err();
        assert!(matches!(err, CliError::Validation(_)), "{err}");
    }

    #[test]
    fn sigma_range_expands() {
        let r = SigmaRange {
            min: 0.1,
            max: 1.0,
            step: 0.1,
        };
        let v = r.values().unwrap();
        assert_eq!(v.len(), 10);
        assert_eq!(v[2], 0.3);
        assert_eq!(v[9], 1.0);
    }

    #[test]
    fn inline_kernel_round_trips() {
        let text = "kernel = { dimension = 1, jumps = [{ z = [1], rate = 0.5 }, { z = [-1], rate = 0.5 }] }\n\
                    experiment = \"kernels\"\n";
        let s = load_str(text).unwrap();
        assert!(matches!(s.kernel, KernelSpec::Inline(_)));
        let again = load_str(&s.to_toml().unwrap()).unwrap();
        assert_eq!(s, again);
    }
}
