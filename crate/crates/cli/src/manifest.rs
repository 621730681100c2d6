//! Run manifests: the effective config, the discretisation actually used and
//! where the inputs came from. A manifest is itself a loadable config.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeInfo {
    pub kind: String,
    pub x0: f64,
    pub length: f64,
    pub nodes: usize,
    pub dx: f64,
    pub dt: f64,
    pub steps: usize,
    pub flux: String,
    pub stepping: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    /// `file` or `solved`; empty for commands without a profile.
    pub profile_source: String,
    pub profile_file: Option<String>,
    /// SHA-256 of the profile in git blob form (`blob <len>\0` prefix).
    pub profile_sha256: Option<String>,
}

impl Provenance {
    pub fn new() -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").into(),
            profile_source: String::new(),
            profile_file: None,
            profile_sha256: None,
        }
    }
}

impl Default for Provenance {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config: ExperimentConfig,
    pub scheme: Option<SchemeInfo>,
    pub provenance: Provenance,
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// SHA-256 of `bytes` hashed as a git blob object.
pub fn git_blob_sha256(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex(&h.finalize())
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let body = toml::to_string(self).expect("manifest serializes");
        format!("# diffwave run manifest; rerun with `diffwave {} --config <this file>`\n{body}", self.command)
    }

    /// Write the manifest into `dir` and return the SHA-256 of its bytes.
    pub fn write(&self, dir: &Path) -> Result<String, CliError> {
        let text = self.to_text();
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, &text).map_err(|e| CliError::io(&path, e))?;
        Ok(sha256_hex(text.as_bytes()))
    }
}
