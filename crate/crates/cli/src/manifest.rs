//! Run manifests: every artifact-producing command records its resolved
//! configuration, the corpus fingerprint, per-phase timings and the
//! SHA-256 of each artifact it wrote, so outputs can always be traced
//! back to the run that made them.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use semtrace_core::Result;

#[derive(Debug, Serialize)]
pub struct ArtifactRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub created_unix: u64,
    pub corpus_fingerprint: String,
    pub config: serde_json::Value,
    /// wall-clock seconds per phase
    pub timings: BTreeMap<String, f64>,
    pub artifacts: Vec<ArtifactRecord>,
    pub checkpoints: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, corpus_fingerprint: String, config: serde_json::Value) -> Self {
        RunManifest {
            tool: "semtrace".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            corpus_fingerprint,
            config,
            timings: BTreeMap::new(),
            artifacts: Vec::new(),
            checkpoints: Vec::new(),
        }
    }

    pub fn record_timing(&mut self, phase: &str, seconds: f64) {
        self.timings.insert(phase.to_string(), seconds);
    }

    pub fn record_artifact(&mut self, path: &Path) -> Result<()> {
        self.artifacts.push(ArtifactRecord {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn record_checkpoints(&mut self, paths: &[PathBuf]) {
        for p in paths {
            self.checkpoints.push(p.display().to_string());
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self).map_err(|e| {
            semtrace_core::CoreError::State(format!("manifest serialization failed: {e}"))
        })?;
        Ok(())
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 8192];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}
