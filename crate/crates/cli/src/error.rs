use std::path::{Path, PathBuf};

use thiserror::Error;

/// Exit code for success.
pub const EXIT_OK: i32 = 0;
/// Usage, configuration or runtime error.
pub const EXIT_ERROR: i32 = 1;
/// The outer loop ran out of iterations.
pub const EXIT_BUDGET: i32 = 2;
/// A verification check failed.
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("trace error: {0}")]
    Trace(String),
    #[error("oracle unavailable for problem '{0}'")]
    OracleUnavailable(String),
    #[error(transparent)]
    Core(#[from] stackelberg_core::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        EXIT_ERROR
    }
}
