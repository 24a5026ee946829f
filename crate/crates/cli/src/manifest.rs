//! Per-stage run manifests: resolved configuration, input/output content
//! hashes, seed, and format version. Manifests are the only artifacts that
//! carry timestamps, so everything else stays byte-identical across reruns.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const FORMAT_VERSION: &str = "1";

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let bytes = std::fs::read(path.as_ref())?;
    Ok(format!("sha256:{:x}", Sha256::digest(&bytes)))
}

#[derive(Serialize)]
pub struct Manifest {
    pub format_version: String,
    pub stage: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub timestamp_unix: u64,
}

impl Manifest {
    pub fn new(stage: &str, seed: u64, config: serde_json::Value) -> Manifest {
        Manifest {
            format_version: FORMAT_VERSION.to_string(),
            stage: stage.to_string(),
            seed,
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn add_input(&mut self, name: &str, path: impl AsRef<Path>) -> Result<()> {
        self.inputs.insert(name.to_string(), sha256_file(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, name: &str, path: impl AsRef<Path>) -> Result<()> {
        self.outputs.insert(name.to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Writes `<stage>.manifest.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let path = dir.as_ref().join(format!("{}.manifest.json", self.stage));
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| crate::error::CliError::config(format!("manifest serialization: {e}")))?;
        std::fs::write(path, json)?;
        Ok(())
    }
}
