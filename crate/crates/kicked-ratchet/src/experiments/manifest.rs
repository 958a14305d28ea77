//! JSON run manifest: resolved parameters, per-run seeds, grid events,
//! wall time, and a checksummed inventory of every emitted file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::quantum::GridEvent;

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub scenario: String,
    pub engine: String,
    pub engine_version: String,
    pub seed: u64,
    pub parameters: serde_json::Value,
    pub per_run_seeds: Vec<u64>,
    pub grid_events: Vec<GridEvent>,
    /// Derived scalar results (fit amplitudes, timescales, ...).
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub wall_ms: u128,
    pub files: Vec<FileEntry>,
    /// False when some grid points failed; completed outputs are kept.
    pub complete: bool,
}

impl RunManifest {
    pub fn new(scenario: &str, seed: u64, parameters: serde_json::Value) -> Self {
        RunManifest {
            scenario: scenario.to_string(),
            engine: "kicked-ratchet".to_string(),
            engine_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            parameters,
            per_run_seeds: Vec::new(),
            grid_events: Vec::new(),
            metrics: BTreeMap::new(),
            notes: Vec::new(),
            wall_ms: 0,
            files: Vec::new(),
            complete: true,
        }
    }

    /// Checksum and record an emitted file.
    pub fn record_file(&mut self, path: &Path) -> Result<()> {
        let data = std::fs::read(path)?;
        let mut hasher = Sha256::new();
        hasher.update(&data);
        self.files.push(FileEntry {
            path: path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
            bytes: data.len() as u64,
            sha256: format!("{:x}", hasher.finalize()),
        });
        Ok(())
    }

    /// Write `manifest.json` atomically (tmp file + rename), always as the
    /// last artifact of a run.
    pub fn write_atomic(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let tmp = dir.join("manifest.json.tmp");
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| crate::error::Error::Format(e.to_string()))?;
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, &path)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_roundtrip_and_checksums() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("data.csv");
        std::fs::write(&f, "a,b\n1.0,2.0\n").unwrap();
        let mut m = RunManifest::new("custom", 7, serde_json::json!({"k": 2.6}));
        m.record_file(&f).unwrap();
        m.metrics.insert("answer".into(), 42.0);
        let path = m.write_atomic(dir.path()).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["scenario"], "custom");
        assert_eq!(v["files"][0]["path"], "data.csv");
        assert_eq!(v["files"][0]["bytes"], 12);
        assert_eq!(v["metrics"]["answer"], 42.0);
        assert!(!dir.path().join("manifest.json.tmp").exists());
    }
}
