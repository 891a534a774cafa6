//! Run manifests: every command that writes data files drops a manifest next
//! to them with the resolved configuration, seed and content digests.
//! Timestamps live only here, so data outputs stay byte-identical across
//! reruns.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    pub started_utc: DateTime<Utc>,
    pub finished_utc: DateTime<Utc>,
    pub outputs: Vec<OutputDigest>,
}

pub struct ManifestBuilder {
    command: Vec<String>,
    config: Option<serde_json::Value>,
    master_seed: Option<u64>,
    started_utc: DateTime<Utc>,
    outputs: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn start() -> Self {
        Self {
            command: std::env::args().collect(),
            config: None,
            master_seed: None,
            started_utc: Utc::now(),
            outputs: Vec::new(),
        }
    }

    pub fn with_config(mut self, config: serde_json::Value, master_seed: u64) -> Self {
        self.config = Some(config);
        self.master_seed = Some(master_seed);
        self
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Write `<first-output>.manifest.json` (or the given explicit path).
    pub fn finish(self, manifest_path: Option<&Path>) -> Result<PathBuf> {
        let default_path = self
            .outputs
            .first()
            .map(|p| {
                let mut os = p.as_os_str().to_owned();
                os.push(".manifest.json");
                PathBuf::from(os)
            })
            .context("manifest requires at least one output file")?;
        let path = manifest_path.unwrap_or(&default_path).to_path_buf();

        let mut outputs = Vec::with_capacity(self.outputs.len());
        for p in &self.outputs {
            let bytes = fs::read(p).with_context(|| format!("digesting output {}", p.display()))?;
            let digest = Sha256::digest(&bytes);
            let mut hex = String::with_capacity(64);
            for b in digest {
                hex.push_str(&format!("{b:02x}"));
            }
            outputs.push(OutputDigest {
                path: p.display().to_string(),
                sha256: hex,
            });
        }
        let manifest = RunManifest {
            tool: "scersim",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            config: self.config,
            master_seed: self.master_seed,
            started_utc: self.started_utc,
            finished_utc: Utc::now(),
            outputs,
        };
        fs::write(&path, serde_json::to_string_pretty(&manifest)?)
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(path)
    }
}
