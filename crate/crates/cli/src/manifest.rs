//! Run manifests: enough to reproduce every output byte-for-byte.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::CliResult;

pub const SCHEMA: &str = "wmarena-run-manifest/1";

#[derive(Debug, Serialize, Deserialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub params: serde_json::Value,
    pub inputs: Vec<InputHash>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, params: serde_json::Value) -> Self {
        Self {
            schema: SCHEMA.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            params,
            inputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> CliResult {
        let bytes = std::fs::read(path)?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        self.inputs.push(InputHash {
            path: path.display().to_string(),
            sha256: hex::encode(hasher.finalize()),
        });
        Ok(())
    }

    pub fn write(&self, out_dir: &Path) -> CliResult {
        std::fs::create_dir_all(out_dir)?;
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(out_dir.join("manifest.json"), json + "\n")?;
        Ok(())
    }
}
