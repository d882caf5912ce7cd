use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulation and classification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index out of range: {what} = {index}, expected < {len}")]
    Range {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("degenerate signal power: {0}")]
    DegeneratePower(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line harness.
    ///
    /// 2 = configuration error, 3 = data error, 4 = numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parameter(_) => 2,
            Error::Numerical(_) | Error::Training(_) | Error::DegeneratePower(_) => 4,
            _ => 3,
        }
    }
}
