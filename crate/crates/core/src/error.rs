use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("half-dimension n must be at least 1")]
    ZeroHalfDimension,

    #[error("dimension {0} is not even and positive")]
    OddDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not orthogonal: max |O^T O - I| = {deviation:e}")]
    NotOrthogonal { deviation: f64 },

    #[error("vector is not a unit vector: |v| = {norm}")]
    NotUnit { norm: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration budget exceeded: {requested:.3e} points requested, cap is {cap:.0e}")]
    BudgetExceeded { requested: f64, cap: f64 },

    #[error("too many generators for sign enumeration: {0} (max 14)")]
    TooManyGenerators(usize),

    #[error("sampler produced no valid points after {attempts} attempts")]
    SamplerStalled { attempts: usize },

    #[error("unknown function id `{0}`")]
    UnknownFunction(String),
}

pub type Result<T> = std::result::Result<T, Error>;
