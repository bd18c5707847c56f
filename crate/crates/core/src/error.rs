use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("kernel table must satisfy s(0) = 1, got {0}")]
    TableOrigin(f64),

    #[error("kernel is not positive semidefinite (spectral minimum {min:e})")]
    NotPositiveSemidefinite { min: f64 },

    #[error("kernel is not square summable; the GOE-type target is undefined")]
    NotSquareSummable,

    #[error("circulant embedding failed for length {len} (relative negativity {negativity:e}) and the dense fallback is capped at {limit}")]
    EmbeddingFailed { len: usize, negativity: f64, limit: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("malformed sample dump: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}
