//! Atomic file output with checksums.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Writes `bytes` to `path` through a temporary sibling and a rename, after
/// syncing the data.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| CliError::io(&tmp, e))?;
        f.sync_all().map_err(|e| CliError::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output directory that remembers what was written into it.
pub struct OutputDir {
    root: PathBuf,
    records: Vec<OutputRecord>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            records: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn records(&self) -> &[OutputRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<OutputRecord> {
        self.records
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.root.join(rel), bytes)?;
        self.records.retain(|r| r.path != rel);
        self.records.push(OutputRecord {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// CSV with a header row; floats use the shortest round-trip representation.
    pub fn write_csv<S: Serialize>(&mut self, rel: &str, rows: &[S]) -> Result<()> {
        let bytes = csv_bytes(rows).map_err(|e| CliError::Malformed {
            path: rel.into(),
            message: e.to_string(),
        })?;
        self.write_bytes(rel, &bytes)
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Malformed {
            path: rel.into(),
            message: e.to_string(),
        })?;
        bytes.push(b'\n');
        self.write_bytes(rel, &bytes)
    }

    pub fn write_json_lines<T: Serialize>(
        &mut self,
        rel: &str,
        items: impl IntoIterator<Item = T>,
    ) -> Result<()> {
        let mut bytes = Vec::new();
        for item in items {
            serde_json::to_writer(&mut bytes, &item).map_err(|e| CliError::Malformed {
                path: rel.into(),
                message: e.to_string(),
            })?;
            bytes.push(b'\n');
        }
        self.write_bytes(rel, &bytes)
    }
}

pub fn csv_bytes<S: Serialize>(rows: &[S]) -> std::result::Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
}

/// `"1,0,-2"`.
pub fn format_point(p: &[i64]) -> String {
    p.iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Row {
        name: String,
        x: f64,
    }

    #[test]
    fn atomic_write_records_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write_bytes("a/b.txt", b"hello").unwrap();
        assert_eq!(fs::read(dir.path().join("a/b.txt")).unwrap(), b"hello");
        assert_eq!(
            out.records()[0].sha256,
            "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
        );
        assert!(!dir.path().join("a/.b.txt.tmp").exists());
    }

    #[test]
    fn csv_floats_round_trip() {
        let rows = vec![
            Row {
                name: "a,b".into(),
                x: 0.1 + 0.2,
            },
            Row {
                name: "q\"uote".into(),
                x: 1.516_386_059_151_978,
            },
        ];
        let bytes = csv_bytes(&rows).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("name,x\n"));
        let back: Vec<Row> = csv::Reader::from_reader(&bytes[..])
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .unwrap();
        assert_eq!(back, rows);
    }
}
