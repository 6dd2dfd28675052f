use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate id: {0}")]
    DuplicateId(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("length mismatch: {left} chunks vs {right} vectors")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("remote error (status {status}): {message}")]
    Remote { status: u16, message: String },

    /// The model returned a blank completion. For a blank second turn the
    /// first-turn answer is kept so callers can salvage it.
    #[error("empty completion in {turn}")]
    EmptyCompletion {
        turn: &'static str,
        long_answer: Option<String>,
    },

    #[error("template error: {0}")]
    Template(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("alignment error: {0}")]
    Alignment(String),
}

/// Coarse error class, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Upstream,
    Data,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Upstream => 3,
            ErrorKind::Data => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Config => "config",
            ErrorKind::Upstream => "upstream",
            ErrorKind::Data => "data",
        }
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Transport(_) | Error::Remote { .. } | Error::EmptyCompletion { .. } => {
                ErrorKind::Upstream
            }
            _ => ErrorKind::Data,
        }
    }

    /// Only transport failures are worth retrying.
    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::Transport(_))
    }
}
