use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("path is not a step path: {0}")]
    NotStepPath(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("budget exceeded: {0}")]
    Budget(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn domain(reason: impl Into<String>) -> Error {
    Error::Domain(reason.into())
}
