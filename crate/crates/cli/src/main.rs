use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use brwlab::scenario::{
    parse_point, parse_table, scenario_from_table, DomainKind, InitKind, ToleranceProfile,
};
use brwlab::{emit_plot_data, run_experiment, Experiment, View};
use clap::{Args, Parser, Subcommand};
use toml::{Table, Value};

#[derive(Parser)]
#[command(
    name = "brwlab",
    version,
    about = "Branching random walks with local perturbations of the branching rate"
)]
struct Cli {
    /// Scenario file; command-line flags override its values.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output directory (default: the scenario's `out`, else `./out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    tolerance_profile: Option<ToleranceProfile>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Heat kernel, Green function, resolvent integral and transience verdict.
    Kernels(KernelsArgs),
    /// Threshold, steady constants and growth eigenvalue for one or more σ.
    Spectral(SpectralArgs),
    /// Factorial moments from the hierarchy, with the moment-bound check.
    Moments(MomentsArgs),
    /// Monte Carlo simulation of the particle system.
    Simulate(SimulateArgs),
    /// σ sweep across the threshold plus a quadrature convergence study.
    Sweep(SweepArgs),
    /// Plot-ready tables from an existing output directory.
    Report(ReportArgs),
}

#[derive(Args, Default)]
struct FieldArgs {
    /// Built-in kernel name (`srw-d3`) or path to a kernel file.
    #[arg(long)]
    kernel: Option<String>,
    /// Single source of strength σ at the origin.
    #[arg(long)]
    sigma: Option<f64>,
    /// Source `x1,...,xd:σ`; repeatable.
    #[arg(long = "source")]
    sources: Vec<String>,
    #[arg(long)]
    mu: Option<f64>,
    /// Raw override `section.key=value` (TOML value syntax); repeatable.
    #[arg(long = "set")]
    sets: Vec<String>,
}

#[derive(Args)]
struct KernelsArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long, value_delimiter = ',')]
    times: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    lambdas: Vec<f64>,
    /// Evaluation point `x1,...,xd`; repeatable.
    #[arg(long = "point")]
    points: Vec<String>,
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Args)]
struct SpectralArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// Comma-separated σ values, each a single source at the origin.
    #[arg(long, value_delimiter = ',')]
    sigmas: Vec<f64>,
    /// `min:max:step`.
    #[arg(long)]
    sigma_range: Option<String>,
    #[arg(long)]
    grid: Option<usize>,
    /// Cube half-widths for the principal Dirichlet eigenvalue.
    #[arg(long, value_delimiter = ',')]
    box_half_widths: Vec<usize>,
}

#[derive(Args)]
struct MomentsArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// Box half-width `R`.
    #[arg(long)]
    half_width: Option<usize>,
    #[arg(long, value_parser = ["absorbing", "periodic"])]
    boundary: Option<String>,
    #[arg(long, value_parser = ["delta", "ones"])]
    initial: Option<String>,
    #[arg(long)]
    max_order: Option<usize>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// `y₀` as `x1,...,xd`.
    #[arg(long)]
    target: Option<String>,
    #[arg(long = "probe")]
    probes: Vec<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long, value_enum)]
    init: Option<InitKind>,
    /// Half-width `W` of the initially occupied cube.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long, value_enum)]
    domain: Option<DomainKind>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    checkpoints: Vec<f64>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long = "probe")]
    probes: Vec<String>,
    #[arg(long)]
    observe: Option<usize>,
    #[arg(long)]
    event_cap: Option<u64>,
    #[arg(long)]
    particle_cap: Option<usize>,
    /// Also write per-replica snapshots as JSON lines.
    #[arg(long)]
    snapshots: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long, value_delimiter = ',')]
    sigmas: Vec<f64>,
    #[arg(long)]
    sigma_range: Option<String>,
    #[arg(long, value_delimiter = ',')]
    grids: Vec<usize>,
    #[arg(long)]
    ode_half_width: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Only this view; default: every view the outputs support.
    #[arg(long, value_enum)]
    view: Option<View>,
}

fn set(table: &mut Table, path: &str, value: Value) {
    match path.split_once('.') {
        Some((section, key)) => {
            let entry = table
                .entry(section)
                .or_insert_with(|| Value::Table(Table::new()));
            if !entry.is_table() {
                *entry = Value::Table(Table::new());
            }
            set(entry.as_table_mut().unwrap(), key, value);
        }
        None => {
            table.insert(path.to_string(), value);
        }
    }
}

fn parse_value(text: &str) -> Value {
    format!("v = {text}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(text.to_string()))
}

fn point_value(text: &str) -> anyhow::Result<Value> {
    Ok(Value::Array(
        parse_point(text)?.into_iter().map(Value::Integer).collect(),
    ))
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| Value::Float(x)).collect())
}

fn range_value(text: &str) -> anyhow::Result<Value> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("sigma range {text:?} must be min:max:step"))?;
    let [min, max, step] = parts[..] else {
        bail!("sigma range {text:?} must be min:max:step")
    };
    let mut t = Table::new();
    t.insert("min".into(), Value::Float(min));
    t.insert("max".into(), Value::Float(max));
    t.insert("step".into(), Value::Float(step));
    Ok(Value::Table(t))
}

fn apply_field(table: &mut Table, f: &FieldArgs) -> anyhow::Result<()> {
    if let Some(k) = &f.kernel {
        set(table, "kernel", Value::String(k.clone()));
    }
    if let Some(s) = f.sigma {
        table.remove("sources");
        set(table, "sigma", Value::Float(s));
    }
    if !f.sources.is_empty() {
        table.remove("sigma");
        set(
            table,
            "sources",
            Value::Array(f.sources.iter().map(|s| Value::String(s.clone())).collect()),
        );
    }
    if let Some(mu) = f.mu {
        set(table, "mu", Value::Float(mu));
    }
    for s in &f.sets {
        let (path, value) = s
            .split_once('=')
            .with_context(|| format!("--set {s:?} must be key=value"))?;
        set(table, path.trim(), parse_value(value.trim()));
    }
    Ok(())
}

fn apply_command(table: &mut Table, command: &Command) -> anyhow::Result<Experiment> {
    Ok(match command {
        Command::Kernels(a) => {
            apply_field(table, &a.field)?;
            if !a.times.is_empty() {
                set(table, "kernels.times", floats(&a.times));
            }
            if !a.lambdas.is_empty() {
                set(table, "kernels.lambdas", floats(&a.lambdas));
            }
            if !a.points.is_empty() {
                let pts = a
                    .points
                    .iter()
                    .map(|p| point_value(p))
                    .collect::<anyhow::Result<_>>()?;
                set(table, "kernels.points", Value::Array(pts));
            }
            if let Some(g) = a.grid {
                set(table, "kernels.grid", Value::Integer(g as i64));
            }
            Experiment::Kernels
        }
        Command::Spectral(a) => {
            apply_field(table, &a.field)?;
            if !a.sigmas.is_empty() {
                set(table, "spectral.sigma_values", floats(&a.sigmas));
            }
            if let Some(r) = &a.sigma_range {
                set(table, "spectral.sigma_range", range_value(r)?);
            }
            if let Some(g) = a.grid {
                set(table, "spectral.grid", Value::Integer(g as i64));
            }
            if !a.box_half_widths.is_empty() {
                let v = a
                    .box_half_widths
                    .iter()
                    .map(|&l| Value::Integer(l as i64))
                    .collect();
                set(table, "spectral.box_half_widths", Value::Array(v));
            }
            Experiment::Spectral
        }
        Command::Moments(a) => {
            apply_field(table, &a.field)?;
            if let Some(r) = a.half_width {
                set(table, "moments.half_width", Value::Integer(r as i64));
            }
            if let Some(b) = &a.boundary {
                set(table, "moments.boundary", Value::String(b.clone()));
            }
            if let Some(i) = &a.initial {
                set(table, "moments.initial", Value::String(i.clone()));
            }
            if let Some(l) = a.max_order {
                set(table, "moments.max_order", Value::Integer(l as i64));
            }
            if let Some(t) = a.t_end {
                set(table, "moments.t_end", Value::Float(t));
            }
            if let Some(dt) = a.dt {
                set(table, "moments.dt", Value::Float(dt));
            }
            if let Some(y) = &a.target {
                set(table, "moments.target", point_value(y)?);
            }
            if !a.probes.is_empty() {
                let pts = a
                    .probes
                    .iter()
                    .map(|p| point_value(p))
                    .collect::<anyhow::Result<_>>()?;
                set(table, "moments.probes", Value::Array(pts));
            }
            Experiment::Moments
        }
        Command::Simulate(a) => {
            apply_field(table, &a.field)?;
            if let Some(i) = a.init {
                let name = match i {
                    InitKind::OnePerSite => "one-per-site",
                    InitKind::Single => "single",
                };
                set(table, "simulate.init", Value::String(name.into()));
            }
            if let Some(w) = a.window {
                set(table, "simulate.window", Value::Integer(w as i64));
            }
            if let Some(d) = a.domain {
                let name = match d {
                    DomainKind::Open => "open",
                    DomainKind::Periodic => "periodic",
                };
                set(table, "simulate.domain", Value::String(name.into()));
            }
            if let Some(t) = a.t_end {
                set(table, "simulate.t_end", Value::Float(t));
            }
            if !a.checkpoints.is_empty() {
                set(table, "simulate.checkpoints", floats(&a.checkpoints));
            }
            if let Some(r) = a.replicas {
                set(table, "simulate.replicas", Value::Integer(r as i64));
            }
            if !a.probes.is_empty() {
                let pts = a
                    .probes
                    .iter()
                    .map(|p| point_value(p))
                    .collect::<anyhow::Result<_>>()?;
                set(table, "simulate.probes", Value::Array(pts));
            }
            if let Some(w) = a.observe {
                set(
                    table,
                    "simulate.observation_half_width",
                    Value::Integer(w as i64),
                );
            }
            if let Some(c) = a.event_cap {
                set(
                    table,
                    "simulate.event_cap",
                    Value::Integer(i64::try_from(c).unwrap_or(i64::MAX)),
                );
            }
            if let Some(c) = a.particle_cap {
                set(table, "simulate.particle_cap", Value::Integer(c as i64));
            }
            if a.snapshots {
                set(table, "simulate.snapshots", Value::Boolean(true));
            }
            Experiment::Simulate
        }
        Command::Sweep(a) => {
            apply_field(table, &a.field)?;
            if !a.sigmas.is_empty() {
                set(table, "sweep.sigma_values", floats(&a.sigmas));
            }
            if let Some(r) = &a.sigma_range {
                set(table, "sweep.sigma_range", range_value(r)?);
            }
            if !a.grids.is_empty() {
                let v = a.grids.iter().map(|&g| Value::Integer(g as i64)).collect();
                set(table, "sweep.grids", Value::Array(v));
            }
            if let Some(r) = a.ode_half_width {
                set(table, "sweep.ode_half_width", Value::Integer(r as i64));
            }
            Experiment::Sweep
        }
        Command::Report(_) => unreachable!("report does not build a scenario"),
    })
}

fn out_dir(cli: &Cli, scenario_out: Option<&Path>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| scenario_out.map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn real_main() -> anyhow::Result<u8> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    if let Command::Report(args) = &cli.command {
        let dir = out_dir(&cli, None);
        let files = emit_plot_data(&dir, args.view)?;
        for f in files {
            println!("{}", f.display());
        }
        return Ok(0);
    }

    let (mut table, base) = match &cli.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            (
                parse_table(&text, path)?,
                path.parent().map(Path::to_path_buf),
            )
        }
        None => (Table::new(), None),
    };
    let experiment = apply_command(&mut table, &cli.command)?;
    match table.get("experiment").and_then(Value::as_str) {
        Some(name) if name != experiment.name() => {
            bail!(
                "scenario is a {name:?} experiment but the `{}` subcommand was used",
                experiment.name()
            )
        }
        _ => set(
            &mut table,
            "experiment",
            Value::String(experiment.name().into()),
        ),
    }
    if let Some(seed) = cli.seed {
        set(
            &mut table,
            "seed",
            Value::Integer(i64::try_from(seed).context("seed must fit in 63 bits")?),
        );
    }
    if let Some(p) = cli.tolerance_profile {
        let name = match p {
            ToleranceProfile::Fast => "fast",
            ToleranceProfile::Strict => "strict",
        };
        set(&mut table, "tolerance_profile", Value::String(name.into()));
    }
    if !table.contains_key("kernel") {
        bail!("no kernel given: pass --kernel or a scenario with `kernel = ...`");
    }
    let scenario = scenario_from_table(table, base.as_deref())?;
    let dir = out_dir(&cli, scenario.out.as_deref());
    let manifest = run_experiment(&scenario, &dir)?;
    for c in &manifest.checks {
        println!("{}: {:?} ({})", c.name, c.status, c.detail);
    }
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(e) = &manifest.error {
        eprintln!("error: {e}");
    }
    println!(
        "wrote {} output(s) and manifest.json to {}",
        manifest.outputs.len(),
        dir.display()
    );
    Ok(manifest.exit_code() as u8)
}
