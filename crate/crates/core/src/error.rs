use thiserror::Error;

/// Everything that can go wrong while building curves, evaluating shape
/// calculus quantities or running an optimisation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShapeError {
    #[error("curve needs at least {min} nodes, got {found}")]
    TooFewNodes { min: usize, found: usize },

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("field has {found} values but the curve has {expected} nodes")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("field contains a non-finite value at node {0}")]
    NonFinite(usize),

    #[error("hessian is singular: {0}")]
    SingularHessian(String),

    #[error("curve is not star-shaped with respect to the origin: {0}")]
    NotStarShaped(String),

    #[error("normal ray from reference node {0} does not meet the curve")]
    ProjectionFailed(usize),

    #[error("shape left the set of simple curves: {0}")]
    ShapeDegenerate(String),

    #[error("line search failed: {0}")]
    LineSearchFailed(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for ShapeError {
    fn from(e: std::io::Error) -> Self {
        ShapeError::Io(e.to_string())
    }
}

impl From<csv::Error> for ShapeError {
    fn from(e: csv::Error) -> Self {
        ShapeError::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for ShapeError {
    fn from(e: serde_json::Error) -> Self {
        ShapeError::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ShapeError>;
