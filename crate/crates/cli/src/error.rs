use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("{op} failed: {source}")]
    Numeric { op: &'static str, source: stickyrelax::Error },

    #[error("{0}")]
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Read { .. } | CliError::Write { .. } => 2,
            CliError::Numeric { .. } => 3,
            CliError::Mismatch(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Tags a solver error with the operation that raised it.
pub trait Op<T> {
    fn op(self, op: &'static str) -> Result<T>;
}

impl<T> Op<T> for stickyrelax::Result<T> {
    fn op(self, op: &'static str) -> Result<T> {
        self.map_err(|source| CliError::Numeric { op, source })
    }
}
