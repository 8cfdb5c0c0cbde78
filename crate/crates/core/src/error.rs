use thiserror::Error;

pub type Result<T> = std::result::Result<T, CanonError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CanonError {
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("columns are linearly dependent: column {column} has residual {residual:e}")]
    RankDeficient { column: usize, residual: f64 },

    #[error("columns are not orthonormal (max |UᵀU - I| = {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("matrix is not symmetric (max |S - Sᵀ| = {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("vector has no entry above the zero threshold")]
    ZeroVector,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("found only {found} of {needed} independent axis projections")]
    IndexSearchExhausted { found: usize, needed: usize },

    #[error("frame is empty")]
    EmptyFrame,

    #[error("canonical set is empty")]
    EmptyCanonicalSet,

    #[error("covariance eigenspace at eigenvalue {eigenvalue:e} (multiplicity {multiplicity}) cannot be resolved: {reason}")]
    DegenerateCovariance {
        eigenvalue: f64,
        multiplicity: usize,
        reason: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("counterexample check failed: {0}")]
    CounterexampleViolation(String),
}
