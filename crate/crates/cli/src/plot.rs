//! Long-format plot tables `(series, x, y, ci_lo, ci_hi)` built from a run's outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::manifest::ResultManifest;
use crate::output::{csv_bytes, sha256_hex, write_atomic, OutputRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum View {
    /// `m₁(t, 0)` from all-ones data against the steady constant.
    M1Convergence,
    /// Occupied fraction of the observation window against `t`.
    Occupancy,
    /// `log G₀(0, x)` against `log |x|`, with the fit and the reference slope.
    GreenAsymptote,
    /// Normalized histograms of `n(t, y)`.
    Histogram,
    /// Growth eigenvalue against σ.
    LambdaCurve,
}

impl View {
    pub const ALL: [View; 5] = [
        View::M1Convergence,
        View::Occupancy,
        View::GreenAsymptote,
        View::Histogram,
        View::LambdaCurve,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::M1Convergence => "m1-convergence",
            Self::Occupancy => "occupancy",
            Self::GreenAsymptote => "green-asymptote",
            Self::Histogram => "histogram",
            Self::LambdaCurve => "lambda-curve",
        }
    }

    /// Outputs the view is built from; the first one must exist.
    fn sources(self) -> &'static [&'static str] {
        match self {
            Self::M1Convergence => &["moments.csv", "moments.json"],
            Self::Occupancy => &["occupancy.csv"],
            Self::GreenAsymptote => &["green_asymptote.csv", "kernels.json"],
            Self::Histogram => &["histograms.csv"],
            Self::LambdaCurve => &["spectral.csv", "sweep.csv"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub series: String,
    pub x: f64,
    pub y: f64,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
}

fn row(series: impl Into<String>, x: f64, y: f64) -> PlotRow {
    PlotRow {
        series: series.into(),
        x,
        y,
        ci_lo: None,
        ci_hi: None,
    }
}

/// Builds plot tables for `view` (or for every view the run supports),
/// writes them under `plot/`, and re-writes the manifest with the new files.
pub fn emit_plot_data(dir: &Path, view: Option<View>) -> Result<Vec<PathBuf>> {
    let mut manifest = ResultManifest::read(dir)?;
    if manifest.outputs.is_empty() {
        return Err(CliError::MissingOutput(
            "the manifest lists no outputs".into(),
        ));
    }
    let views: Vec<View> = match view {
        Some(v) => vec![v],
        None => View::ALL
            .into_iter()
            .filter(|v| available(&manifest, *v))
            .collect(),
    };
    if views.is_empty() {
        return Err(CliError::MissingOutput(
            "no plot view applies to this run's outputs".into(),
        ));
    }
    let mut written = Vec::new();
    for v in views {
        let rows = build_view(dir, &manifest, v)?;
        let rel = format!("plot/{}.csv", v.name());
        let bytes = csv_bytes(&rows).map_err(|e| CliError::Malformed {
            path: rel.clone().into(),
            message: e.to_string(),
        })?;
        write_atomic(&dir.join(&rel), &bytes)?;
        manifest.outputs.retain(|o| o.path != rel);
        manifest.outputs.push(OutputRecord {
            path: rel.clone(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
        written.push(dir.join(rel));
    }
    manifest.write(dir)?;
    Ok(written)
}

fn available(manifest: &ResultManifest, v: View) -> bool {
    match v {
        View::LambdaCurve => v.sources().iter().any(|s| manifest.output(s).is_some()),
        _ => v.sources().iter().all(|s| manifest.output(s).is_some()),
    }
}

/// Reads an output listed in the manifest and verifies its checksum.
fn read_output(dir: &Path, manifest: &ResultManifest, rel: &str) -> Result<Vec<u8>> {
    let record = manifest
        .output(rel)
        .ok_or_else(|| CliError::MissingOutput(rel.to_string()))?;
    let path = dir.join(rel);
    let bytes = std::fs::read(&path).map_err(|_| CliError::MissingOutput(rel.to_string()))?;
    if sha256_hex(&bytes) != record.sha256 {
        return Err(CliError::Malformed {
            path,
            message: "checksum does not match the manifest".into(),
        });
    }
    Ok(bytes)
}

fn records(
    dir: &Path,
    manifest: &ResultManifest,
    rel: &str,
) -> Result<Vec<BTreeMap<String, String>>> {
    let bytes = read_output(dir, manifest, rel)?;
    csv::Reader::from_reader(&bytes[..])
        .deserialize()
        .collect::<std::result::Result<Vec<BTreeMap<String, String>>, _>>()
        .map_err(|e| CliError::Malformed {
            path: dir.join(rel),
            message: e.to_string(),
        })
}

fn json(dir: &Path, manifest: &ResultManifest, rel: &str) -> Result<serde_json::Value> {
    let bytes = read_output(dir, manifest, rel)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Malformed {
        path: dir.join(rel),
        message: e.to_string(),
    })
}

fn field(rec: &BTreeMap<String, String>, key: &str, rel: &str) -> Result<f64> {
    rec.get(key)
        .and_then(|v| v.parse::<f64>().ok())
        .ok_or_else(|| CliError::Malformed {
            path: rel.into(),
            message: format!("column {key} missing or not numeric"),
        })
}

fn build_view(dir: &Path, manifest: &ResultManifest, v: View) -> Result<Vec<PlotRow>> {
    match v {
        View::M1Convergence => {
            let summary = json(dir, manifest, "moments.json")?;
            if summary["initial"] != "ones" {
                return Err(CliError::MissingOutput(
                    "m1 convergence needs a moments run with all-ones data".into(),
                ));
            }
            let a = summary["steady_constant"].as_f64();
            let recs = records(dir, manifest, "moments.csv")?;
            let column = recs
                .first()
                .and_then(|r| r.keys().find(|k| k.starts_with("m1@")).cloned())
                .ok_or_else(|| CliError::Malformed {
                    path: "moments.csv".into(),
                    message: "no m1 column".into(),
                })?;
            let mut rows = Vec::new();
            for r in &recs {
                let t = field(r, "t", "moments.csv")?;
                rows.push(row("m1", t, field(r, &column, "moments.csv")?));
                if let Some(a) = a {
                    rows.push(row("A_line", t, a));
                }
            }
            Ok(rows)
        }
        View::Occupancy => {
            let mut rows = Vec::new();
            for r in records(dir, manifest, "occupancy.csv")? {
                let t = field(&r, "t", "occupancy.csv")?;
                let f = field(&r, "occupied_fraction", "occupancy.csv")?;
                let se = field(&r, "occupied_fraction_se", "occupancy.csv")?;
                rows.push(PlotRow {
                    series: "occupied_fraction".into(),
                    x: t,
                    y: f,
                    ci_lo: Some(f - 1.96 * se),
                    ci_hi: Some(f + 1.96 * se),
                });
            }
            Ok(rows)
        }
        View::GreenAsymptote => {
            let info = json(dir, manifest, "kernels.json")?;
            let fit = &info["asymptote"];
            let (Some(exponent), Some(constant), Some(expected)) = (
                fit["exponent"].as_f64(),
                fit["constant"].as_f64(),
                info["expected_exponent"].as_f64(),
            ) else {
                return Err(CliError::MissingOutput(
                    "kernels.json has no asymptote fit".into(),
                ));
            };
            let mut rows = Vec::new();
            let mut points = Vec::new();
            for r in records(dir, manifest, "green_asymptote.csv")? {
                let radius = field(&r, "radius", "green_asymptote.csv")?;
                let g = field(&r, "green", "green_asymptote.csv")?;
                points.push(radius.ln());
                rows.push(row("log_G0", radius.ln(), g.ln()));
            }
            points.sort_by(f64::total_cmp);
            points.dedup();
            let fit_name = format!("fit slope {exponent:.4}");
            let ref_name = format!("reference slope {expected}");
            for &x in &points {
                rows.push(row(fit_name.clone(), x, constant.ln() + exponent * x));
            }
            for &x in &points {
                rows.push(row(ref_name.clone(), x, constant.ln() + expected * x));
            }
            Ok(rows)
        }
        View::Histogram => {
            let mut rows = Vec::new();
            for r in records(dir, manifest, "histograms.csv")? {
                let t = field(&r, "t", "histograms.csv")?;
                let n = field(&r, "n", "histograms.csv")?;
                let count = field(&r, "count", "histograms.csv")?;
                let total = field(&r, "replicas", "histograms.csv")?;
                let p = count / total;
                let se = (p * (1.0 - p) / total).sqrt();
                let probe = r.get("probe").cloned().unwrap_or_default();
                rows.push(PlotRow {
                    series: format!("t={t} probe={probe}"),
                    x: n,
                    y: p,
                    ci_lo: Some((p - 1.96 * se).max(0.0)),
                    ci_hi: Some((p + 1.96 * se).min(1.0)),
                });
            }
            Ok(rows)
        }
        View::LambdaCurve => {
            let rel = if manifest.output("spectral.csv").is_some() {
                "spectral.csv"
            } else {
                "sweep.csv"
            };
            let mut rows = Vec::new();
            for r in records(dir, manifest, rel)? {
                let sigma = field(&r, "sigma", rel)?;
                // no positive eigenvalue at or below the threshold
                let lambda = r
                    .get("lambda")
                    .and_then(|v| v.parse::<f64>().ok())
                    .unwrap_or(0.0);
                rows.push(row("lambda", sigma, lambda));
            }
            Ok(rows)
        }
    }
}
