use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A `.ts` file rejected at a specific (1-based) line.
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("line {line}: variable-length unsupported")]
    VariableLength { line: usize },

    /// Binary dataset layout violations.
    #[error("{0}")]
    Format(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported version {0}")]
    UnsupportedVersion(u64),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("labels required")]
    LabelsRequired,

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("worker {worker_id} failed: {reason}")]
    Worker { worker_id: u32, reason: String },

    #[error("timed out after {0:?}")]
    Timeout(std::time::Duration),

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("model json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            line,
            reason: reason.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn protocol(msg: impl Into<String>) -> Self {
        Error::Protocol(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Protocol(_) | Error::Worker { .. } | Error::Timeout(_) => 3,
            _ => 2,
        }
    }
}
