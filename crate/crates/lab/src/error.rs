use std::path::PathBuf;

use thiserror::Error;
use vml_core::VmlError;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] VmlError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("archive: {0}")]
    Archive(String),
    #[error("checkpoint {path}: {msg}")]
    Checkpoint { path: PathBuf, msg: String },
    #[error("fit inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> LabError {
    let path = path.into();
    move |source| LabError::Io { path, source }
}

pub(crate) fn csv_err(path: impl Into<PathBuf>) -> impl FnOnce(csv::Error) -> LabError {
    let path = path.into();
    move |source| LabError::Csv { path, source }
}
