use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by validation, simulation, aggregation and file handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no arms")]
    NoArms,

    #[error("dataset has no modules")]
    EmptyDataset,

    #[error("duplicate module id `{0}`")]
    DuplicateModule(String),

    #[error("module `{id}` has non-positive size {size}")]
    InvalidSize { id: String, size: f64 },

    #[error("arm `{arm}` does not match the dataset: {detail}")]
    Coverage { arm: String, detail: String },

    #[error("expected {expected} per-arm outcomes, got {got}")]
    OutcomeCount { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("zero baseline")]
    ZeroBaseline,

    #[error("degenerate variance: {0}")]
    DegenerateVariance(&'static str),

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("cell {index} ({label}) failed: {source}")]
    Cell {
        index: usize,
        label: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input (flags, config files) rather
    /// than data or runtime failures.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidParameter(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
