use std::path::PathBuf;

use thiserror::Error;

/// A single line that failed to parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for LineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {count} malformed line(s), first: {first}")]
    Malformed {
        path: PathBuf,
        count: usize,
        first: LineError,
    },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing resource for variant {variant}: {what}")]
    MissingResource { variant: String, what: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("checkpoint config mismatch: {}", .0.join(", "))]
    ConfigMismatch(Vec<String>),

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("output directory {0} is locked by another run")]
    Locked(PathBuf),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 usage/config, 2 data, 3 divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::MissingResource { .. } | Error::Locked(_) => 1,
            Error::ConfigMismatch(_) => 1,
            Error::Divergence(_) => 3,
            Error::Io { .. } | Error::Malformed { .. } | Error::Data(_) | Error::Checkpoint(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
