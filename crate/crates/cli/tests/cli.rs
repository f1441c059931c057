use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use brwlab::manifest::{CheckStatus, ResultManifest};
use brwlab::scenario::{parse_table, scenario_from_table};
use brwlab::{emit_plot_data, CliError, Experiment, Scenario, View};

fn brwlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brwlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn csv_rows(path: &Path) -> Vec<BTreeMap<String, String>> {
    csv::Reader::from_path(path)
        .unwrap()
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap()
}

/// `G₀(0,0)` of the simple cubic lattice in closed form:
/// `√6 / (32π³) Γ(1/24) Γ(5/24) Γ(7/24) Γ(11/24)`.
fn watson_closed_form() -> f64 {
    use statrs::function::gamma::gamma;
    let pi = std::f64::consts::PI;
    6f64.sqrt() / (32.0 * pi.powi(3))
        * gamma(1.0 / 24.0)
        * gamma(5.0 / 24.0)
        * gamma(7.0 / 24.0)
        * gamma(11.0 / 24.0)
}

#[test]
fn spectral_sweep_flips_at_the_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = brwlab(&[
        "spectral",
        "--kernel",
        "srw-d3",
        "--sigma-range",
        "0.1:1.0:0.1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("spectral.csv"));
    assert_eq!(rows.len(), 10);
    let sigma_star = 1.0 / watson_closed_form();
    assert!((sigma_star - 0.659_46).abs() < 1e-5);
    for r in &rows {
        let sigma: f64 = r["sigma"].parse().unwrap();
        let expected = if sigma < sigma_star {
            "subcritical"
        } else {
            "supercritical"
        };
        assert_eq!(r["regime"], expected, "sigma {sigma}");
        let star: f64 = r["sigma_star"].parse().unwrap();
        assert!((star - sigma_star).abs() < 1e-4);
        if sigma < sigma_star {
            let a: f64 = r["A_or_C"].parse().unwrap();
            let oracle = 1.0 / (1.0 - sigma / sigma_star);
            assert!((a - oracle).abs() < 1e-3 * oracle, "{a} vs {oracle}");
            assert!(r["lambda"].is_empty());
        } else {
            assert!(r["lambda"].parse::<f64>().unwrap() > 0.0);
            assert!(r["A_or_C"].is_empty());
        }
    }
    let manifest = ResultManifest::read(&out).unwrap();
    assert_eq!(manifest.exit_code(), 0);
    assert!(
        manifest.output("spectral.csv").is_some() && manifest.output("spectral.json").is_some()
    );
}

#[test]
fn csv_numbers_parse_back_losslessly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = brwlab(&[
        "spectral",
        "--kernel",
        "srw-d3",
        "--sigma",
        "0.3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let rows = csv_rows(&out.join("spectral.csv"));
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("spectral.json")).unwrap()).unwrap();
    let a_json = json["reports"][0]["steady_constant"].as_f64().unwrap();
    let a_csv: f64 = rows[0]["A_or_C"].parse().unwrap();
    assert_eq!(a_csv.to_bits(), a_json.to_bits());
}

#[test]
fn subcritical_moments_pass_the_bound_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m");
    let o = brwlab(&[
        "moments",
        "--kernel",
        "srw-d3",
        "--sigma",
        "0.3",
        "--half-width",
        "8",
        "--t-end",
        "4",
        "--max-order",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let manifest = ResultManifest::read(&out).unwrap();
    let bound = manifest
        .checks
        .iter()
        .find(|c| c.name == "moment-bound")
        .unwrap();
    assert_eq!(bound.status, CheckStatus::Pass);
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("moments.json")).unwrap()).unwrap();
    let ratios = summary["bound_check"]["max_ratio"].as_array().unwrap();
    assert_eq!(ratios.len(), 3);
    assert!(ratios.iter().all(|r| r.as_f64().unwrap() <= 1.0 + 1e-3));
    assert_eq!(summary["dl_values"][3], "15");
    let rows = csv_rows(&out.join("moments.csv"));
    assert_eq!(rows[0]["m1"], "1");
    assert_eq!(rows[0]["m2"], "0");
}

#[test]
fn zero_replicas_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let o = brwlab(&[
        "simulate",
        "--kernel",
        "srw-d1",
        "--replicas",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("replicas"));
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn simulation_outputs_reproduce_from_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = brwlab(&[
            "simulate",
            "--kernel",
            "srw-d1",
            "--window",
            "30",
            "--replicas",
            "20",
            "--checkpoints",
            "1,2,4",
            "--observe",
            "10",
            "--snapshots",
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        ResultManifest::read(&out).unwrap()
    };
    let a = run("a", "7");
    let b = run("b", "7");
    let c = run("c", "8");
    assert_eq!(a.seed, 7);
    for file in [
        "simulate.csv",
        "histograms.csv",
        "snapshots.jsonl",
        "occupancy.csv",
        "sim_moments.csv",
    ] {
        assert_eq!(
            a.output(file).unwrap().sha256,
            b.output(file).unwrap().sha256,
            "{file}"
        );
    }
    assert_ne!(
        a.output("snapshots.jsonl").unwrap().sha256,
        c.output("snapshots.jsonl").unwrap().sha256
    );
}

#[test]
fn manifest_checksums_match_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k");
    let o = brwlab(&[
        "kernels",
        "--kernel",
        "srw-d3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let manifest = ResultManifest::read(&out).unwrap();
    assert!(!manifest.outputs.is_empty());
    for rec in &manifest.outputs {
        let bytes = std::fs::read(out.join(&rec.path)).unwrap();
        assert_eq!(brwlab::output::sha256_hex(&bytes), rec.sha256);
        assert_eq!(bytes.len() as u64, rec.bytes);
    }
    let rows = csv_rows(&out.join("kernels.csv"));
    assert_eq!(rows.last().unwrap()["value"], "transient");
}

#[test]
fn scenario_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("run.toml");
    std::fs::write(
        &scenario,
        "kernel = \"srw-d3\"\nexperiment = \"spectral\"\nsigma = 0.3\nseed = 11\n[spectral]\ngrid = 32\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let o = brwlab(&[
        "spectral",
        "--scenario",
        scenario.to_str().unwrap(),
        "--sigma",
        "0.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = ResultManifest::read(&out).unwrap();
    assert_eq!(m.scenario.sigma, Some(0.5));
    assert_eq!(m.scenario.seed, 11);
    assert_eq!(m.scenario.spectral.as_ref().unwrap().grid, Some(32));

    let o = brwlab(&[
        "moments",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("spectral"));
}

#[test]
fn unknown_scenario_key_is_rejected_by_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("bad.toml");
    std::fs::write(
        &scenario,
        "kernel = \"srw-d3\"\nexperiment = \"spectral\"\nsigmaa = 0.3\n",
    )
    .unwrap();
    let o = brwlab(&[
        "spectral",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sigmaa"));
}

#[test]
fn kernel_file_is_inlined_into_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("lazy.toml"),
        "dimension = 1\njumps = [{ z = [1], rate = 0.25 }, { z = [-1], rate = 0.25 }, { z = [2], rate = 0.25 }, { z = [-2], rate = 0.25 }]\n",
    )
    .unwrap();
    let text = "kernel = \"lazy.toml\"\nexperiment = \"kernels\"\n";
    let table = parse_table(text, Path::new("s.toml")).unwrap();
    let s = scenario_from_table(table, Some(dir.path())).unwrap();
    let k = s.build_kernel().unwrap();
    assert_eq!(k.dimension(), 1);
    assert_eq!(k.range(), 2);
    let again = scenario_from_table(
        parse_table(&s.to_toml().unwrap(), Path::new("s.toml")).unwrap(),
        None,
    )
    .unwrap();
    assert_eq!(again, s);
}

#[test]
fn report_views() {
    let dir = tempfile::tempdir().unwrap();
    let m1 = dir.path().join("m1");
    let o = brwlab(&[
        "moments",
        "--kernel",
        "srw-d3",
        "--sigma",
        "0.3",
        "--initial",
        "ones",
        "--half-width",
        "6",
        "--t-end",
        "4",
        "--out",
        m1.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let files = emit_plot_data(&m1, Some(View::M1Convergence)).unwrap();
    let rows = csv_rows(&files[0]);
    assert_eq!(
        rows[0].keys().cloned().collect::<Vec<_>>(),
        ["ci_hi", "ci_lo", "series", "x", "y"]
    );
    let series: std::collections::BTreeSet<_> = rows.iter().map(|r| r["series"].clone()).collect();
    assert!(series.contains("m1") && series.contains("A_line"));
    assert!(ResultManifest::read(&m1)
        .unwrap()
        .output("plot/m1-convergence.csv")
        .is_some());

    let k = dir.path().join("k");
    assert!(brwlab(&[
        "kernels",
        "--kernel",
        "srw-d3",
        "--out",
        k.to_str().unwrap()
    ])
    .status
    .success());
    let o = brwlab(&[
        "report",
        "--view",
        "green-asymptote",
        "--out",
        k.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let rows = csv_rows(&k.join("plot/green-asymptote.csv"));
    assert!(rows.iter().any(|r| r["series"] == "reference slope -1"));

    // the kernels run has no simulation output
    let err = emit_plot_data(&k, Some(View::Occupancy)).unwrap_err();
    assert!(matches!(err, CliError::MissingOutput(_)), "{err}");
}

#[test]
fn empty_manifest_has_no_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let s = Scenario::minimal("srw-d3", Experiment::Spectral);
    ResultManifest::new(&s).write(dir.path()).unwrap();
    let err = emit_plot_data(dir.path(), None).unwrap_err();
    assert!(matches!(err, CliError::MissingOutput(_)), "{err}");
}

#[test]
fn tampered_output_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    assert!(brwlab(&[
        "sweep",
        "--kernel",
        "srw-d3",
        "--sigmas",
        "0.5,0.8",
        "--grids",
        "16,32",
        "--out",
        out.to_str().unwrap()
    ])
    .status
    .success());
    std::fs::write(out.join("sweep.csv"), "sigma,lambda\n1,1\n").unwrap();
    let err = emit_plot_data(&out, Some(View::LambdaCurve)).unwrap_err();
    assert!(matches!(err, CliError::Malformed { .. }), "{err}");
}
