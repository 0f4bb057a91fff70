use std::path::{Path, PathBuf};

use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}: {msg}", path.display())]
    Schema { path: PathBuf, line: usize, msg: String },
    #[error("{}: {msg}", path.display())]
    Config { path: PathBuf, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn schema(path: &Path, line: usize, msg: impl Into<String>) -> Self {
        CliError::Schema { path: path.to_path_buf(), line, msg: msg.into() }
    }

    pub fn csv(path: &Path, e: csv::Error) -> Self {
        let line = e.position().map_or(0, |p| p.line() as usize + 1);
        CliError::schema(path, line, e.to_string())
    }

    /// JSON errors carry their own line number.
    pub fn json(path: &Path, e: serde_json::Error) -> Self {
        CliError::schema(path, e.line(), e.to_string())
    }

    pub fn config(path: &Path, msg: impl Into<String>) -> Self {
        CliError::Config { path: path.to_path_buf(), msg: msg.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => EXIT_NUMERICAL,
            _ => EXIT_SCHEMA,
        }
    }
}
