use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degree distribution is empty")]
    EmptyDistribution,
    #[error("negative probability {value} at index {index}")]
    NegativeProbability { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("base distribution has mass {value} at degree {degree} (< 2)")]
    LowDegreeMass { degree: usize, value: f64 },
    #[error("cannot place {replicas} replicas in {slots} slots")]
    TooManyReplicas { replicas: usize, slots: usize },
    #[error("first-part length {alpha} must satisfy {min} <= alpha <= {n}")]
    InvalidAlpha { alpha: usize, min: usize, n: usize },
    #[error("frame must have at least one slot")]
    EmptyFrame,
    #[error("invalid frame placement: {0}")]
    InvalidPlacement(String),
    #[error("invalid stopping-set structure: {0}")]
    MalformedStructure(String),
    #[error("enumeration bounds out of range: {0}")]
    BoundsOverflow(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot merge statistics: {0}")]
    MergeMismatch(String),
    #[error("catalog parse error: {0}")]
    CatalogFormat(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
