use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{atomic_write, IoError};

/// Record of one command invocation. Written before the command starts and
/// again when it ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    /// The configuration file exactly as read.
    pub config_text: String,
    /// Every key with defaults filled in; enough to reproduce the run.
    pub config_canonical: String,
    /// Hex SHA-256 of `config_canonical`.
    pub config_sha256: String,
    /// Parsed configuration as JSON.
    pub config: serde_json::Value,
    pub seed: u64,
    pub threads: usize,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: Option<f64>,
    pub outputs: Vec<PathBuf>,
    pub exit_status: Option<i32>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

impl RunManifest {
    pub fn new(
        command: &str,
        config_text: &str,
        config_canonical: &str,
        config: serde_json::Value,
        seed: u64,
        threads: usize,
    ) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_text: config_text.to_string(),
            config_canonical: config_canonical.to_string(),
            config_sha256: sha256_hex(config_canonical.as_bytes()),
            config,
            seed,
            threads,
            started: unix_now(),
            finished: None,
            outputs: Vec::new(),
            exit_status: None,
        }
    }

    pub fn finish(&mut self, status: i32, outputs: Vec<PathBuf>) {
        self.finished = Some(unix_now());
        self.exit_status = Some(status);
        self.outputs = outputs;
    }

    /// Whether the stored hash matches the stored canonical text.
    pub fn hash_matches(&self) -> bool {
        sha256_hex(self.config_canonical.as_bytes()) == self.config_sha256
    }
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<(), IoError> {
    let mut json = serde_json::to_string_pretty(manifest).map_err(|e| IoError::Format(e.to_string()))?;
    json.push('\n');
    atomic_write(path, json.as_bytes())
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::path(path, e))?;
    serde_json::from_str(&text).map_err(|e| IoError::Format(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::new("run", "mu=1\n", "mu = 1\n", serde_json::json!({"mu": 1.0}), 7, 1);
        m.finish(0, vec![dir.path().join("report.json")]);
        let path = dir.path().join("manifest.json");
        write_manifest(&path, &m).unwrap();
        let back = read_manifest(&path).unwrap();
        assert_eq!(back, m);
        assert!(back.hash_matches());
    }
}
