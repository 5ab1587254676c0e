use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] itscale_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}, line {line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("calibration did not converge after {iterations} iterations (best-so-far written)")]
    NotConverged { iterations: usize },
}

impl CliError {
    /// 1 for bad input, 2 for numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NotConverged { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
