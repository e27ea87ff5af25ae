use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the modelling, estimation and IO layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent or invalid configuration (dimensions, rates, grids).
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller-side contract was violated (time rewinds, bad ordering).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The data cannot support estimation (no events, unidentifiable model).
    #[error("estimation error: {0}")]
    Estimation(String),

    /// A malformed record in an input file.
    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn estimation(msg: impl Into<String>) -> Self {
        Error::Estimation(msg.into())
    }

    /// Process exit code for each error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Io { .. } => 3,
            Error::Parse { .. } => 4,
            Error::Config(_) => 5,
            Error::Precondition(_) => 6,
            Error::Estimation(_) => 7,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
