//! The result manifest: what ran, what it wrote, and whether it passed.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::output::{write_atomic, OutputRecord};
use crate::scenario::Scenario;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultManifest {
    pub artifact_version: String,
    pub scenario: Scenario,
    pub seed: u64,
    pub outputs: Vec<OutputRecord>,
    pub timings: Vec<Timing>,
    pub checks: Vec<CheckRecord>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

impl ResultManifest {
    pub fn new(scenario: &Scenario) -> Self {
        Self {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: scenario.clone(),
            seed: scenario.seed,
            outputs: Vec::new(),
            timings: Vec::new(),
            checks: Vec::new(),
            warnings: Vec::new(),
            error: None,
        }
    }

    pub fn failed_checks(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| c.status == CheckStatus::Fail)
            .count()
    }

    /// `0` on success, `1` on an error, `2` when a bound check failed.
    pub fn exit_code(&self) -> i32 {
        if self.error.is_some() {
            1
        } else if self.failed_checks() > 0 {
            2
        } else {
            0
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self).map_err(|e| CliError::Malformed {
            path: dir.join(MANIFEST_FILE),
            message: e.to_string(),
        })?;
        bytes.push(b'\n');
        write_atomic(&dir.join(MANIFEST_FILE), &bytes)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Malformed {
            path,
            message: e.to_string(),
        })
    }

    pub fn output(&self, rel: &str) -> Option<&OutputRecord> {
        self.outputs.iter().find(|o| o.path == rel)
    }
}
