//! Error type shared by every module in the crate.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Dimension or shape disagreement between operands.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Input that violates a documented precondition.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A numerical routine failed (non-convergence, non-finite values).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at outer epoch {epoch}: {message}")]
    Diverged { epoch: usize, message: String },

    /// A configured resource limit was exceeded.
    #[error("resource limit: {0}")]
    Resource(String),

    /// A data file failed to parse; `line` is 1-based.
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Run configuration rejected before any compute.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the CLI: 2 for configuration/validation
    /// problems, 3 for numerical divergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Shape(_)
            | Error::Invalid(_)
            | Error::Resource(_)
            | Error::Malformed { .. }
            | Error::Config(_) => 2,
            Error::Numerical(_) | Error::Diverged { .. } => 3,
            Error::Io { .. } => 1,
        }
    }
}
