//! Command-line harness: binds the arena library into a reproducible
//! experiment pipeline of file-composable commands.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 validation error. Every run
//! directory gets a manifest (config, tool version, input hashes); outputs
//! are byte-reproducible from the manifest because all randomness flows from
//! the seed and floats are formatted with a fixed 6-significant-digit rule.

pub mod args;
pub mod commands;
pub mod formats;
pub mod manifest;
pub mod svg;

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, missing upstream artifacts, contract violations: exit 2.
    Validation(String),
    /// Runtime failures (IO mid-run, internal errors): exit 1.
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

/// Stats calibration failures are caller errors (granularity, too few
/// negatives); most other library errors are runtime.
impl From<wmarena_core::stats::StatsError> for CliError {
    fn from(e: wmarena_core::stats::StatsError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<wmarena_core::codecs::CodecError> for CliError {
    fn from(e: wmarena_core::codecs::CodecError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Stable string hash for deterministic per-class seeding.
pub fn stable_hash(text: &str) -> u64 {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}
