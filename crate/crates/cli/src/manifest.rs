//! Run manifest: the single JSON file linking every artifact of a pipeline
//! run, embedding the fully resolved configuration, its hash, and per-file
//! digests. No timestamps or host details — reruns with the same seed must
//! produce byte-identical manifests regardless of worker count.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestFile {
    pub name: String,
    pub path: String,
    pub sha256: String,
    pub stage: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageStatus {
    pub name: String,
    pub status: String, // "ok" | "failed: <reason>" | "skipped"
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub config_sha256: String,
    pub master_seed: u64,
    pub stages: Vec<StageStatus>,
    pub outputs: Vec<ManifestFile>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn hash_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

impl Manifest {
    pub fn new(resolved: &ExperimentConfig) -> anyhow::Result<Self> {
        let config_json = serde_json::to_vec(resolved)?;
        Ok(Self {
            config: resolved.clone(),
            config_sha256: sha256_hex(&config_json),
            master_seed: resolved.sde.master_seed,
            stages: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn record_stage(&mut self, name: &str, status: String) {
        self.stages.push(StageStatus { name: name.to_string(), status });
    }

    /// Register an artifact; `base` is the output directory the manifest
    /// lives in, so stored paths are relative and rerun-stable.
    pub fn record_file(&mut self, stage: &str, base: &Path, path: &PathBuf) -> anyhow::Result<()> {
        let rel = path.strip_prefix(base).unwrap_or(path).to_string_lossy().into_owned();
        self.outputs.push(ManifestFile {
            name: path.file_name().unwrap_or_default().to_string_lossy().into_owned(),
            path: rel,
            sha256: hash_file(path)?,
            stage: stage.to_string(),
        });
        Ok(())
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        crate::report::write_json(path, self)
    }
}
