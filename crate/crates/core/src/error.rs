use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degree {degree} exceeds the per-variable budget {budget}")]
    DegreeBudget { degree: u32, budget: u16 },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("invalid ensemble spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rejection budget exhausted at point {point} after {proposals} proposals")]
    RejectionBudget { point: usize, proposals: u64 },

    #[error("degenerate Gram-Schmidt pivot at point {point}: residual norm^2 {residual:e}")]
    DegeneratePivot { point: usize, residual: f64 },

    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },

    #[error("non-real test function: {0}")]
    NonReal(String),

    #[error("boundary spectrum does not decay (aliasing): {0}")]
    Aliasing(String),

    #[error("quadrature grid does not match spec: {0}")]
    GridMismatch(String),

    #[error("samples mix different ensemble specs")]
    MixedSpecs,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("too few replicates: got {got}, need at least {need}")]
    TooFewReplicates { got: usize, need: usize },

    #[error("k = {0} is outside the supported range")]
    OrderOutOfRange(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("malformed input: {0}")]
    Malformed(String),
}
