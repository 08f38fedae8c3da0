use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("zero has no polar part")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("degenerate subspace: {0}")]
    DegenerateSubspace(&'static str),
    #[error("subspace not T_μ-stable")]
    NotInvariant,
    #[error("point at infinity for this chart")]
    PointAtInfinity,
    #[error("resonant block: A - lambda_top(C) I is singular")]
    ResonantBlock,
    #[error("block is not proximal: {0}")]
    NotProximal(&'static str),
    #[error("criterion stated for one-dimensional L")]
    ChartDimension,
    #[error("gap uncertified")]
    GapUncertified,
    #[error("point lies in the exceptional subspace")]
    InExceptionalSubspace,
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("not supported over this field: {0}")]
    Unsupported(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
