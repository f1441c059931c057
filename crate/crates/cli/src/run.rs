//! Runs a validated scenario and records everything in a manifest.

use std::path::Path;
use std::time::Instant;

use brwlab_core::kernels::{
    green_asymptote_fit, green_function, is_transient, resolvent_integral, transience_check,
    transition_probability, JumpKernel, TorusGrid,
};
use brwlab_core::moments::{
    catalan_d, majorization_check, moment_bound_check, solve_factorial_moments, solve_first_moment,
    Boundary, InitialData, LatticeBox, MomentOptions, MomentTable,
};
use brwlab_core::sim::{
    distribution_snapshot, estimate_moments, occupancy_stats, simulate, SimStats, Truncation,
    MIN_HISTOGRAM_REPLICAS,
};
use brwlab_core::spectral::{
    bound_constant_b, box_principal_eigenvalue, spectral_report, steady_mean_constant,
    PerturbationField, Regime, SpectralReport,
};
use serde::Serialize;
use serde_json::json;

use crate::error::Result;
use crate::manifest::{CheckRecord, CheckStatus, ResultManifest, Timing};
use crate::output::{format_point, OutputDir};
use crate::scenario::{Experiment, Initial, Scenario};

/// Accumulates outputs, timings, checks and warnings during a run.
pub struct RunContext {
    pub out: OutputDir,
    pub manifest: ResultManifest,
}

impl RunContext {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let r = f(self);
        self.manifest.timings.push(Timing {
            stage: name.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        r
    }

    fn check(&mut self, name: &str, status: CheckStatus, detail: String) {
        self.manifest.checks.push(CheckRecord {
            name: name.to_string(),
            status,
            detail,
        });
    }

    fn warn(&mut self, w: impl Into<String>) {
        self.manifest.warnings.push(w.into());
    }
}

/// Runs `scenario`, writing outputs and finally `manifest.json` into `out`.
///
/// Module errors are recorded in the manifest rather than returned; the
/// returned `Err` is reserved for failures to write the output directory.
pub fn run_experiment(scenario: &Scenario, out: &Path) -> Result<ResultManifest> {
    let mut ctx = RunContext {
        out: OutputDir::create(out)?,
        manifest: ResultManifest::new(scenario),
    };
    let result = match scenario.experiment {
        Experiment::Kernels => run_kernels(scenario, &mut ctx),
        Experiment::Spectral => run_spectral(scenario, &mut ctx),
        Experiment::Moments => run_moments(scenario, &mut ctx),
        Experiment::Simulate => run_simulate(scenario, &mut ctx),
        Experiment::Sweep => run_sweep(scenario, &mut ctx),
    };
    if let Err(e) = result {
        if matches!(e, crate::error::CliError::Io { .. }) {
            return Err(e);
        }
        ctx.manifest.error = Some(e.to_string());
    }
    let RunContext {
        out: dir,
        mut manifest,
    } = ctx;
    manifest.outputs = dir.into_records();
    manifest.write(out)?;
    Ok(manifest)
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

// ------------------------------------------------------------------ kernels

#[derive(Serialize)]
struct KernelRow {
    quantity: &'static str,
    t: Option<f64>,
    lambda: Option<f64>,
    x: String,
    y: String,
    value: String,
    est_error: Option<f64>,
}

#[derive(Serialize)]
struct AsymptoteRow {
    radius: f64,
    green: f64,
}

fn run_kernels(scenario: &Scenario, ctx: &mut RunContext) -> Result<()> {
    let kernel = scenario.build_kernel()?;
    let d = kernel.dimension();
    let s = scenario.kernels.clone().expect("defaults filled");
    let grid = scenario.grid(d, s.grid, None)?;
    let origin = vec![0i64; d];
    let rows = ctx.stage("kernels", |_| {
        let mut rows = Vec::new();
        for &t in &s.times {
            for y in &s.points {
                let p = transition_probability(&kernel, &grid, t, &origin, y)?;
                rows.push(KernelRow {
                    quantity: "p",
                    t: Some(t),
                    lambda: None,
                    x: format_point(&origin),
                    y: format_point(y),
                    value: fmt_f64(p.value),
                    est_error: Some(p.est_error),
                });
            }
        }
        for &lambda in &s.lambdas {
            for y in &s.points {
                let g = if lambda == 0.0 && !is_transient(&kernel) {
                    None
                } else {
                    Some(green_function(&kernel, &grid, lambda, &origin, y)?)
                };
                rows.push(KernelRow {
                    quantity: "G",
                    t: None,
                    lambda: Some(lambda),
                    x: format_point(&origin),
                    y: format_point(y),
                    value: fmt_f64(g.map_or(f64::INFINITY, |g| g.value)),
                    est_error: g.map(|g| g.est_error),
                });
            }
            let i = resolvent_integral(&kernel, &grid, lambda)?;
            rows.push(KernelRow {
                quantity: "I",
                t: None,
                lambda: Some(lambda),
                x: String::new(),
                y: String::new(),
                value: fmt_f64(i.value),
                est_error: Some(i.est_error),
            });
        }
        Ok(rows)
    })?;
    let mut rows = rows;
    let report = ctx.stage("transience", |_| {
        Ok(transience_check(&kernel, &s.transience_grids)?)
    })?;
    rows.push(KernelRow {
        quantity: "transience",
        t: None,
        lambda: None,
        x: String::new(),
        y: String::new(),
        value: format!("{:?}", report.verdict).to_lowercase(),
        est_error: None,
    });
    ctx.out.write_csv("kernels.csv", &rows)?;

    let fit = if s.asymptote_radii.is_empty() {
        None
    } else {
        let fit = ctx.stage("asymptote", |_| {
            Ok(green_asymptote_fit(&kernel, &grid, &s.asymptote_radii)?)
        })?;
        let samples: Vec<AsymptoteRow> = fit
            .samples
            .iter()
            .map(|&(radius, green)| AsymptoteRow { radius, green })
            .collect();
        ctx.out.write_csv("green_asymptote.csv", &samples)?;
        Some(fit)
    };
    ctx.out.write_json(
        "kernels.json",
        &json!({
            "dimension": d,
            "grid": grid,
            "transience": report,
            "asymptote": fit,
            "expected_exponent": if d >= 3 { Some(-(d as f64 - 2.0)) } else { None },
        }),
    )?;
    Ok(())
}

// ----------------------------------------------------------------- spectral

#[derive(Serialize)]
struct SpectralRow {
    sigma: f64,
    regime: String,
    #[serde(rename = "A_or_C")]
    a_or_c: Option<f64>,
    #[serde(rename = "B")]
    b: Option<f64>,
    lambda: Option<f64>,
    sigma_star: f64,
}

fn regime_name(r: Regime) -> String {
    format!("{r:?}").to_lowercase()
}

fn spectral_row(sigma: f64, r: &SpectralReport) -> SpectralRow {
    SpectralRow {
        sigma,
        regime: regime_name(r.regime),
        a_or_c: r.steady_constant,
        b: r.bound_b,
        lambda: r.growth_eigenvalue.map(|g| g.lambda),
        sigma_star: r.sigma_star,
    }
}

#[derive(Serialize)]
struct BoxRow {
    sigma: f64,
    half_width: usize,
    eigenvalue: f64,
    trial_rayleigh: f64,
    iterations: usize,
}

fn run_spectral(scenario: &Scenario, ctx: &mut RunContext) -> Result<()> {
    let kernel = scenario.build_kernel()?;
    let d = kernel.dimension();
    let s = scenario.spectral.clone().expect("defaults filled");
    let grid = scenario.grid(d, s.grid, s.quadrature)?;
    let sigmas = scenario.spectral_sigmas()?;
    let fields: Vec<(f64, PerturbationField)> = if sigmas.is_empty() {
        let f = scenario.build_field(d)?;
        vec![(f.sigma_total(), f)]
    } else {
        sigmas
            .iter()
            .map(|&sg| Ok((sg, PerturbationField::single(d, scenario.mu, sg)?)))
            .collect::<Result<_>>()?
    };
    let reports = ctx.stage("spectral", |_| {
        fields
            .iter()
            .map(|(_, f)| Ok(spectral_report(&kernel, &grid, f)?))
            .collect::<Result<Vec<_>>>()
    })?;
    let rows: Vec<SpectralRow> = fields
        .iter()
        .zip(&reports)
        .map(|((sg, _), r)| spectral_row(*sg, r))
        .collect();
    ctx.out.write_csv("spectral.csv", &rows)?;

    let diagnostics = if is_transient(&kernel) {
        let coarse = grid
            .coarsened()
            .map(|c| resolvent_integral(&kernel, &c, 0.0))
            .transpose()?;
        let fine = resolvent_integral(&kernel, &grid, 0.0)?;
        json!({ "grid": grid, "green_origin": fine, "green_origin_coarse": coarse })
    } else {
        json!({ "grid": grid, "recurrent": true })
    };

    let mut boxes = Vec::new();
    if !s.box_half_widths.is_empty() {
        ctx.stage("box-eigenvalues", |_| {
            for (sg, _) in &fields {
                for &l in &s.box_half_widths {
                    let e = box_principal_eigenvalue(&kernel, l, *sg, &vec![0; d])?;
                    boxes.push(BoxRow {
                        sigma: *sg,
                        half_width: l,
                        eigenvalue: e.eigenvalue,
                        trial_rayleigh: e.trial_rayleigh,
                        iterations: e.iterations,
                    });
                }
            }
            Ok(())
        })?;
        ctx.out.write_csv("box_eigenvalues.csv", &boxes)?;
    }
    ctx.out.write_json(
        "spectral.json",
        &json!({ "quadrature": diagnostics, "reports": reports }),
    )?;
    Ok(())
}

// ------------------------------------------------------------------ moments

fn run_moments(scenario: &Scenario, ctx: &mut RunContext) -> Result<()> {
    let kernel = scenario.build_kernel()?;
    let d = kernel.dimension();
    let field = scenario.build_field(d)?;
    let s = scenario.moments.clone().expect("defaults filled");
    let lattice = scenario.moment_box()?;
    let times = scenario.moment_times();
    let h = lattice.generator(&kernel, &field)?;
    let grid = scenario.grid(d, s.grid, None)?;
    let spectral = spectral_report(&kernel, &grid, &field).ok();
    let steady = spectral.as_ref().and_then(|r| r.steady_constant);
    let dt = s.dt.unwrap();

    let mut summary = serde_json::Map::new();
    summary.insert("box_half_width".into(), json!(lattice.half_width()));
    summary.insert("boundary".into(), json!(lattice.boundary()));
    summary.insert("dt".into(), json!(dt));
    summary.insert("steady_constant".into(), json!(steady));
    summary.insert("spectral".into(), json!(spectral));

    match s.initial.unwrap() {
        Initial::Ones => {
            let m = ctx.stage("first-moment", |_| {
                Ok(solve_first_moment(
                    &h,
                    &lattice,
                    &InitialData::Ones,
                    &times,
                    dt,
                )?)
            })?;
            let mut header = vec!["t".to_string()];
            header.extend(s.probes.iter().map(|p| format!("m1@{}", format_point(p))));
            let mut rows = vec![header];
            for (j, &t) in times.iter().enumerate() {
                let mut row = vec![fmt_f64(t)];
                for p in &s.probes {
                    row.push(fmt_f64(m.at(&lattice, j, p).expect("validated probe")));
                }
                rows.push(row);
            }
            write_table(ctx, "moments.csv", &rows)?;
            for w in &m.warnings {
                ctx.warn(w.clone());
            }
            summary.insert("initial".into(), json!("ones"));
            if s.bound_check.unwrap() {
                ctx.check(
                    "moment-bound",
                    CheckStatus::Skipped,
                    "bound check needs delta initial data".into(),
                );
            }
        }
        Initial::Delta => {
            let target = s.target.clone().unwrap();
            let options = MomentOptions {
                dt,
                step_halving: s.step_halving.unwrap(),
            };
            let table = ctx.stage("hierarchy", |_| {
                Ok(solve_factorial_moments(
                    &h,
                    &lattice,
                    &field,
                    s.max_order.unwrap(),
                    &target,
                    &times,
                    options,
                )?)
            })?;
            write_table(ctx, "moments.csv", &moment_rows(&table, &s.probes))?;
            for w in &table.warnings {
                ctx.warn(w.clone());
            }
            summary.insert("initial".into(), json!("delta"));
            summary.insert("target".into(), json!(target));
            summary.insert("step_error".into(), json!(table.step_error));
            if s.bound_check.unwrap() {
                let bound = ctx.stage("bound-check", |ctx| {
                    bound_check(ctx, &kernel, &grid, &field, &lattice, &table, &s)
                })?;
                summary.insert("bound_check".into(), bound);
            }
            if target.iter().all(|&c| c == 0)
                && field
                    .sources()
                    .iter()
                    .all(|src| src.site.iter().all(|&c| c == 0))
            {
                let m = majorization_check(&table, &[])?;
                let status = if m.holds {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                };
                ctx.check(
                    "majorization",
                    status,
                    format!("worst margin {:e}", m.worst_margin),
                );
                summary.insert("majorization".into(), json!(m));
            }
        }
    }
    let dl = catalan_d(s.dl_terms.unwrap())?;
    let holds = dl.growth_bound_holds();
    let all = holds.iter().all(|&b| b);
    ctx.check(
        "dl-growth",
        if all {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        format!("D_l <= 4^l l! for l <= {}", holds.len()),
    );
    summary.insert(
        "dl_values".into(),
        json!(dl.values.iter().map(|v| v.to_string()).collect::<Vec<_>>()),
    );
    ctx.out.write_json("moments.json", &summary)?;
    Ok(())
}

fn moment_rows(table: &MomentTable, probes: &[Vec<i64>]) -> Vec<Vec<String>> {
    let mut header = vec!["t".to_string(), "probe".to_string()];
    header.extend((1..=table.max_order).map(|l| format!("m{l}")));
    let mut rows = vec![header];
    for (j, &t) in table.times.iter().enumerate() {
        for p in probes {
            let mut row = vec![fmt_f64(t), format_point(p)];
            for l in 1..=table.max_order {
                row.push(fmt_f64(table.get(l, j, p).expect("validated probe")));
            }
            rows.push(row);
        }
    }
    rows
}

fn write_table(ctx: &mut RunContext, rel: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(r)
            .map_err(|e| crate::error::CliError::Malformed {
                path: rel.into(),
                message: e.to_string(),
            })?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| crate::error::CliError::Malformed {
            path: rel.into(),
            message: e.to_string(),
        })?;
    ctx.out.write_bytes(rel, &bytes)
}

fn bound_check(
    ctx: &mut RunContext,
    kernel: &JumpKernel,
    grid: &TorusGrid,
    field: &PerturbationField,
    lattice: &LatticeBox,
    table: &MomentTable,
    s: &crate::scenario::MomentsSection,
) -> Result<serde_json::Value> {
    if !is_transient(kernel) {
        ctx.check(
            "moment-bound",
            CheckStatus::Skipped,
            "recurrent walk: no finite constants".into(),
        );
        return Ok(json!(null));
    }
    let (k, b) = match (
        steady_mean_constant(kernel, grid, field),
        bound_constant_b(kernel, grid, field),
    ) {
        (Ok(k), Ok(b)) => (k, b),
        _ => {
            ctx.check(
                "moment-bound",
                CheckStatus::Skipped,
                "field is not subcritical".into(),
            );
            return Ok(json!(null));
        }
    };
    if lattice.boundary() != Boundary::Absorbing {
        ctx.warn("bound check on a periodic box compares against the periodic heat kernel");
    }
    let free = PerturbationField::unperturbed(field.mu())?;
    let h0 = lattice.generator(kernel, &free)?;
    let p = solve_first_moment(
        &h0,
        lattice,
        &InitialData::Delta(table.target.clone()),
        &table.times,
        table.dt / 2.0,
    )?;
    let report = moment_bound_check(
        table,
        k,
        b,
        &p.values,
        s.bound_tolerance.unwrap(),
        s.bound_radius,
    )?;
    let ratios: Vec<String> = report
        .max_ratio
        .iter()
        .map(|r| format!("{r:.4e}"))
        .collect();
    ctx.check(
        "moment-bound",
        if report.pass {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        format!(
            "max ratios by order [{}], tolerance {}",
            ratios.join(", "),
            report.tolerance
        ),
    );
    Ok(json!(report))
}

// ----------------------------------------------------------------- simulate

#[derive(Serialize)]
struct SimRow {
    t: f64,
    probe: String,
    replicas: usize,
    mean: f64,
    std_err: f64,
    p_empty: f64,
    p_empty_se: f64,
}

#[derive(Serialize)]
struct SimMomentRow {
    t: f64,
    probe: String,
    order: usize,
    mean: f64,
    std_err: f64,
    ci_lo: f64,
    ci_hi: f64,
    nonzero_samples: usize,
    low_confidence: bool,
}

#[derive(Serialize)]
struct OccupancyCsv {
    t: f64,
    replicas: usize,
    occupied_fraction: f64,
    occupied_fraction_se: f64,
    mean_islands: f64,
    mean_island_size: f64,
    mean_largest_island: f64,
}

#[derive(Serialize)]
struct HistogramRow {
    t: f64,
    probe: String,
    n: usize,
    count: u64,
    replicas: usize,
}

#[derive(Serialize)]
struct SnapshotLine<'a> {
    replica: u64,
    seed: u64,
    snapshot: &'a brwlab_core::sim::Snapshot,
}

fn run_simulate(scenario: &Scenario, ctx: &mut RunContext) -> Result<()> {
    let config = scenario.sim_config()?;
    let s = scenario.simulate.clone().expect("defaults filled");
    let keep = s.snapshots.unwrap();
    let stats = ctx.stage("simulate", |_| Ok(simulate(&config, keep)?))?;
    write_sim_outputs(ctx, &stats, s.max_moment_order.unwrap())?;
    if keep {
        let lines = stats.replicas.iter().flat_map(|r| {
            r.snapshots.iter().map(move |snap| SnapshotLine {
                replica: r.replica,
                seed: r.seed,
                snapshot: snap,
            })
        });
        ctx.out.write_json_lines("snapshots.jsonl", lines)?;
    }
    let truncated = stats.truncated_replicas();
    if truncated > 0 {
        ctx.warn(format!(
            "{truncated} replica(s) stopped early at the event or particle cap"
        ));
    }
    let events: u64 = stats.replicas.iter().map(|r| r.events.real()).sum();
    let truncations: Vec<_> = stats
        .replicas
        .iter()
        .filter_map(|r| r.truncated.map(|t| (r.replica, t)))
        .map(|(r, t)| match t {
            Truncation::EventCap { t } => json!({ "replica": r, "cap": "events", "t": t }),
            Truncation::ParticleCap { t } => json!({ "replica": r, "cap": "particles", "t": t }),
        })
        .collect();
    ctx.out.write_json(
        "simulate.json",
        &json!({
            "config": config,
            "replica_seeds": stats.replicas.iter().map(|r| r.seed).collect::<Vec<_>>(),
            "real_events": events,
            "truncated": truncations,
        }),
    )?;
    Ok(())
}

fn write_sim_outputs(ctx: &mut RunContext, stats: &SimStats, max_order: usize) -> Result<()> {
    let mut rows = Vec::new();
    let mut hist_rows = Vec::new();
    let mut low_confidence = false;
    for (j, &t) in stats.checkpoints.iter().enumerate() {
        for (k, probe) in stats.probes.iter().enumerate() {
            let p = stats.probe_summary(j, k);
            rows.push(SimRow {
                t,
                probe: format_point(probe),
                replicas: p.replicas,
                mean: p.mean,
                std_err: p.std_err,
                p_empty: p.p_empty,
                p_empty_se: p.p_empty_se,
            });
            let hist = distribution_snapshot(stats, k, j)?;
            low_confidence |= hist.low_confidence;
            for (n, &count) in hist.counts.iter().enumerate() {
                hist_rows.push(HistogramRow {
                    t,
                    probe: format_point(probe),
                    n,
                    count,
                    replicas: hist.replicas,
                });
            }
        }
    }
    ctx.out.write_csv("simulate.csv", &rows)?;
    ctx.out.write_csv("histograms.csv", &hist_rows)?;
    if low_confidence {
        ctx.warn(format!(
            "histograms use {} replicas; at least {MIN_HISTOGRAM_REPLICAS} are needed for a confident shape",
            stats.replicas.len()
        ));
    }
    if stats.replicas.len() >= 2 {
        let moments = estimate_moments(stats, max_order)?;
        let rows: Vec<SimMomentRow> = moments
            .iter()
            .map(|m| SimMomentRow {
                t: m.t,
                probe: format_point(&m.probe),
                order: m.order,
                mean: m.mean,
                std_err: m.std_err,
                ci_lo: m.ci_lo,
                ci_hi: m.ci_hi,
                nonzero_samples: m.nonzero_samples,
                low_confidence: m.low_confidence,
            })
            .collect();
        ctx.out.write_csv("sim_moments.csv", &rows)?;
    }
    if stats
        .replicas
        .first()
        .is_some_and(|r| r.snapshots.first().is_some_and(|s| s.observation.is_some()))
    {
        let occ = occupancy_stats(stats)?;
        let rows: Vec<OccupancyCsv> = occ
            .iter()
            .map(|o| OccupancyCsv {
                t: o.t,
                replicas: o.replicas,
                occupied_fraction: o.occupied_fraction,
                occupied_fraction_se: o.occupied_fraction_se,
                mean_islands: o.mean_islands,
                mean_island_size: o.mean_island_size,
                mean_largest_island: o.mean_largest_island,
            })
            .collect();
        ctx.out.write_csv("occupancy.csv", &rows)?;
    }
    Ok(())
}

// -------------------------------------------------------------------- sweep

#[derive(Serialize)]
struct SweepRow {
    sigma: f64,
    regime: String,
    #[serde(rename = "A_or_C")]
    a_or_c: Option<f64>,
    #[serde(rename = "B")]
    b: Option<f64>,
    lambda: Option<f64>,
    sigma_star: f64,
    ode_m1_end: Option<f64>,
    ode_log_slope: Option<f64>,
}

#[derive(Serialize)]
struct ConvergenceRow {
    points_per_axis: usize,
    mode: String,
    value: f64,
    est_error: f64,
}

fn run_sweep(scenario: &Scenario, ctx: &mut RunContext) -> Result<()> {
    let kernel = scenario.build_kernel()?;
    let d = kernel.dimension();
    let s = scenario.sweep.clone().expect("defaults filled");
    let sigmas = scenario.sweep_sigmas()?;
    let grid = scenario.grid(d, None, None)?;
    let ode_box = s
        .ode_half_width
        .map(|r| LatticeBox::new(d, r, Boundary::Absorbing))
        .transpose()?;
    let rows = ctx.stage("sweep", |_| {
        let mut rows = Vec::new();
        for &sigma in &sigmas {
            let field = PerturbationField::single(d, scenario.mu, sigma)?;
            let r = spectral_report(&kernel, &grid, &field)?;
            let (mut m_end, mut slope) = (None, None);
            if let Some(lattice) = &ode_box {
                let t_end = s.t_end.unwrap();
                let times: Vec<f64> = (0..=10).map(|j| t_end * (0.5 + 0.05 * j as f64)).collect();
                let h = lattice.generator(&kernel, &field)?;
                let m = solve_first_moment(&h, lattice, &InitialData::Ones, &times, 0.05)?;
                let origin = vec![0; d];
                let values: Vec<f64> = (0..times.len())
                    .map(|j| m.at(lattice, j, &origin).unwrap())
                    .collect();
                m_end = values.last().copied();
                let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
                slope = Some(brwlab_core::numerics::fit_line(&times, &logs).0);
            }
            let base = spectral_row(sigma, &r);
            rows.push(SweepRow {
                sigma,
                regime: base.regime,
                a_or_c: base.a_or_c,
                b: base.b,
                lambda: base.lambda,
                sigma_star: base.sigma_star,
                ode_m1_end: m_end,
                ode_log_slope: slope,
            });
        }
        Ok(rows)
    })?;
    ctx.out.write_csv("sweep.csv", &rows)?;

    if is_transient(&kernel) {
        let conv = ctx.stage("convergence", |_| {
            let mut rows = Vec::new();
            for &n in &s.grids {
                for mode in [
                    brwlab_core::kernels::QuadratureMode::Plain,
                    brwlab_core::kernels::QuadratureMode::Extrapolated,
                ] {
                    let g = TorusGrid::with_mode(d, n, mode)?;
                    let e = resolvent_integral(&kernel, &g, 0.0)?;
                    rows.push(ConvergenceRow {
                        points_per_axis: n,
                        mode: format!("{mode:?}").to_lowercase(),
                        value: e.value,
                        est_error: e.est_error,
                    });
                }
            }
            Ok(rows)
        })?;
        ctx.out.write_csv("convergence.csv", &conv)?;
    } else {
        ctx.warn("recurrent walk: no I(0) convergence study");
    }
    Ok(())
}
