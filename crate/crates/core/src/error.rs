use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot parse `{token}`: {reason}")]
    Parse { token: String, reason: String },

    #[error("horizon T={horizon} exceeds the solver cap of {cap}")]
    ResourceLimit { horizon: u32, cap: u32 },

    #[error("seller `{0}` does not expose enumerable randomness")]
    UnsupportedSeller(String),

    #[error("policy mismatch: {0}")]
    PolicyMismatch(String),

    #[error("offer requested for round {t} past the horizon T={horizon}")]
    PastHorizon { t: u32, horizon: u32 },

    #[error("sweep row {row} failed: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(token: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            token: token.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
