use thiserror::Error;

/// Errors raised by space construction, net building, evaluation and the verifiers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation (e.g. `a <= b`, `r <= 0`).
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition on the inputs does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The request exceeds what the materialized space or hierarchy can provide.
    #[error("resource limit: {0}")]
    Resource(String),

    /// No witness was found at the working resolution.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A space or net description could not be turned into a valid object.
    #[error("invalid spec: {0}")]
    Spec(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
