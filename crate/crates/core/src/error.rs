use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Two sequences that must be index-aligned have different lengths.
    #[error("alignment error: expected {expected} entries, got {got}")]
    Alignment { expected: usize, got: usize },

    /// A posterior puts mass where the prior has none.
    #[error("support violation: positive posterior weight on zero prior mass at entry {index}")]
    SupportViolation { index: usize },

    /// A numeric argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A theorem's premise does not hold for this input.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A loss profile, distribution or dataset failed validation.
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}
