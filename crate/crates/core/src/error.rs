use thiserror::Error;

use crate::data::IdxError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Idx(#[from] IdxError),

    #[error("config error: {0}")]
    Config(String),

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Coarse error category, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    InvalidArgument,
    Shape,
    InvalidState,
    NonFinite,
    Parse,
    Config,
    Io,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::InvalidArgument => 2,
            ErrorCategory::Shape => 3,
            ErrorCategory::InvalidState => 4,
            ErrorCategory::NonFinite => 5,
            ErrorCategory::Parse => 6,
            ErrorCategory::Config => 7,
            ErrorCategory::Io => 8,
        }
    }
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidArgument(_) => ErrorCategory::InvalidArgument,
            Error::Shape(_) => ErrorCategory::Shape,
            Error::InvalidState(_) => ErrorCategory::InvalidState,
            Error::NonFinite(_) => ErrorCategory::NonFinite,
            Error::Idx(_) | Error::Snapshot(_) => ErrorCategory::Parse,
            Error::Config(_) => ErrorCategory::Config,
            Error::Io(_) | Error::Csv(_) => ErrorCategory::Io,
        }
    }
}
