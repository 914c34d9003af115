use crate::text::TokenUnit;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("token unit mismatch: {left:?} vs {right:?}")]
    UnitMismatch { left: TokenUnit, right: TokenUnit },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("undefined error rate: no usable reference tokens")]
    UndefinedRate,

    #[error("duplicate bundle id: {0:?}")]
    DuplicateId(String),

    #[error("bundle {0:?} has no ground-truth transcript; evaluation unavailable")]
    MissingTruth(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
