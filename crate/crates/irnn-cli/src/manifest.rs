//! Run manifests: every command records its resolved inputs, seeds, and
//! a checksum per artifact, so identical inputs are verifiable against
//! identical outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use irnn_core::Result;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    /// SHA-256 of the resolved configuration JSON.
    pub config_hash: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: BTreeMap<String, String>,
    pub model_kind: Option<String>,
    pub out_dir: String,
    /// SHA-256 per artifact file name.
    pub artifacts: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, out_dir: &Path) -> RunManifest {
        let config_hash = sha256_hex(config.to_string().as_bytes());
        RunManifest {
            schema_version: 1,
            command: command.to_string(),
            config_hash,
            config,
            seeds: Vec::new(),
            inputs: BTreeMap::new(),
            model_kind: None,
            out_dir: out_dir.display().to_string(),
            artifacts: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) {
        self.inputs.insert(name.to_string(), path.display().to_string());
    }

    /// Checksum and record an artifact inside the output directory.
    pub fn artifact(&mut self, out_dir: &Path, file_name: &str) -> Result<()> {
        let digest = sha256_file(&out_dir.join(file_name))?;
        self.artifacts.insert(file_name.to_string(), digest);
        Ok(())
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        std::fs::write(
            out_dir.join("manifest.json"),
            serde_json::to_string_pretty(self)?,
        )?;
        Ok(())
    }
}

/// Record every listed artifact and write the manifest.
pub fn finalize(
    mut manifest: RunManifest,
    out_dir: &Path,
    artifacts: &[PathBuf],
) -> Result<()> {
    for path in artifacts {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_default();
        manifest.artifact(out_dir, &name)?;
    }
    manifest.write(out_dir)
}
