use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecqError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("compatibility violation: {0}")]
    CompatibilityViolation(String),

    #[error("invalid triple: {0}")]
    InvalidTriple(String),

    #[error("no embedding registered for Q={q}, n={n}")]
    UnsupportedEmbedding { q: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field has no free nodes")]
    NoFreeNodes,

    #[error("radius {r} out of range (0, {max})")]
    RadiusOutOfRange { r: f64, max: f64 },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("test field support touches the domain boundary")]
    SupportTouchesBoundary,

    #[error("root finder failed at node {node:?}: {reason}")]
    RootFinding { node: Vec<f64>, reason: String },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, SpecqError>;

pub(crate) fn dim_mismatch(expected: impl ToString, found: impl ToString) -> SpecqError {
    SpecqError::DimensionMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
