use thiserror::Error;

pub type Result<T> = std::result::Result<T, GwptError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GwptError {
    #[error("width matrix is not symmetric (max |C - C^T| = {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("imaginary part of width matrix is not positive definite (eigenvalue {eigenvalue:e})")]
    ImaginaryPartNotPositiveDefinite { eigenvalue: f64 },

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("semiclassical parameters differ: {bra} vs {ket}")]
    EpsMismatch { bra: f64, ket: f64 },

    #[error("matrix C0 - conj(C) is numerically singular")]
    SingularDifference,

    #[error("dimension {dim} exceeds the limit {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("index {index:?} out of range for grid with {points} points per dimension")]
    IndexOutOfRange { index: Vec<i64>, points: usize },

    #[error("invalid geometry: spacing {dq} must be below box length {box_length}")]
    InvalidGeometry { dq: f64, box_length: f64 },

    #[error("Gauss-Hermite order {n} outside 1..={max}")]
    NTooLarge { n: usize, max: usize },

    #[error("need at least {needed} sweep records, got {found}")]
    TooFewPoints { found: usize, needed: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
