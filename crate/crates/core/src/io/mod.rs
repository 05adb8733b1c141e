//! Configuration files, checkpoints, reports and run manifests.

mod checkpoint;
mod config;
mod manifest;
mod report;
mod series_dir;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use checkpoint::{
    atomic_write, decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use config::{parse_config, with_overrides, ConfigError, RunConfig, ScalarOptions, CONFIG_KEYS};
pub use manifest::{read_manifest, sha256_hex, unix_now, write_manifest, RunManifest};
pub use series_dir::{read_series_dir, write_series_dir, SERIES_META};
pub use report::{emit_reports, ReportBundle, ScalarSection, REPORT_FILES};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Path { path: PathBuf, source: std::io::Error },
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("checkpoint format version {found} is not supported (expected version {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("checkpoint truncated: needs {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("malformed checkpoint: {0}")]
    Format(String),
}

impl IoError {
    pub(crate) fn path(path: &Path, source: std::io::Error) -> Self {
        IoError::Path { path: path.to_path_buf(), source }
    }
}
