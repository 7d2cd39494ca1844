use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degree {degree} out of range for dimension {dim}")]
    DegreeOutOfRange { dim: usize, degree: usize },

    #[error("invalid multi-index {entries:?} in dimension {dim}")]
    InvalidMultiIndex { dim: usize, entries: Vec<usize> },

    #[error("exterior derivative of a top-degree form (q = {0})")]
    DegreeOverflow(usize),

    #[error("coderivative of a 0-form")]
    DegreeUnderflow,

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("incompatible operands: {0}")]
    Incompatible(String),

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("deflation vectors are not linearly independent (vector {index})")]
    IllPosedDeflation { index: usize },

    #[error("dense oracle refused: {dofs} degrees of freedom exceed the limit {limit}")]
    TooManyDofs { dofs: usize, limit: usize },

    #[error("decomposition failed: {0}")]
    DecompositionFailed(String),

    #[error("domain boundary has {0} components; a connected boundary is required")]
    DisconnectedBoundary(usize),

    #[error("domain carries {0} harmonic Dirichlet 1-forms; the estimate needs none")]
    HarmonicFormsPresent(usize),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
