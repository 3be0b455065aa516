use thiserror::Error;

/// Errors surfaced by every layer of the optimizer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("no oracle: {0}")]
    NoOracle(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn state(msg: impl Into<String>) -> Self {
        Error::InvalidState(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    /// Stable short code used by the wire protocol and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::InvalidState(_) => "invalid-state",
            Error::NotFound(_) => "not-found",
            Error::Parse { .. } => "parse",
            Error::Resource(_) => "resource",
            Error::NoOracle(_) => "no-oracle",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
