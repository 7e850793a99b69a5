// SPDX-License-Identifier: Apache-2.0

//! Provenance record written next to every command's outputs. It carries no
//! timestamps, so rerunning a command reproduces it byte for byte.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    params: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

#[derive(Debug, Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

fn digest(path: &Path) -> Result<FileDigest> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let hash = Sha256::digest(&bytes);
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: hash.iter().map(|b| format!("{b:02x}")).collect(),
    })
}

impl RunManifest {
    pub fn new(command: &'static str, params: &impl Serialize, seed: Option<u64>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            params: serde_json::to_value(params).unwrap_or(serde_json::Value::Null),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn inputs(mut self, paths: &[&Path]) -> Result<Self> {
        self.inputs = paths.iter().map(|p| digest(p)).collect::<Result<_>>()?;
        Ok(self)
    }

    pub fn outputs(mut self, paths: &[&Path]) -> Result<Self> {
        self.outputs = paths.iter().map(|p| digest(p)).collect::<Result<_>>()?;
        Ok(self)
    }

    /// Writes `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        self.write_as(&dir.join("manifest.json"))
    }

    pub fn write_as(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
    }
}
