use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix input contains a non-finite entry")]
    NonFinite,
    #[error("matrix must have at least one row")]
    EmptyMatrix,
    #[error("every column is numerically zero; there is no subspace to span")]
    AllZero,
    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive definite (lambda_min {min:e}, lambda_max {max:e})")]
    NotPD { min: f64, max: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("supplied family is not a dual frame (reconstruction residual {0:e})")]
    NotADual(f64),
    #[error("coefficient {index} does not lie in its subspace (relative distance {distance:e})")]
    NotInSubspace { index: usize, distance: f64 },
    #[error("not a fusion frame: lower bound {lower:e} relative to upper bound {upper:e}")]
    NotAFrame { lower: f64, upper: f64 },
    #[error("vector {0} is zero")]
    ZeroVector(usize),
    #[error("operator is numerically singular")]
    Singular,
    #[error("partition block {0} is empty")]
    EmptyBlock(usize),
    #[error("index {index} out of range for {len} vectors")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("theorem hypothesis violated (margin {margin:e})")]
    HypothesisViolated { margin: f64 },
    #[error("not a ({lambda1}, {lambda2})-perturbation: measured lambda {measured}")]
    NotAPerturbation {
        lambda1: f64,
        lambda2: f64,
        measured: f64,
    },
    #[error("invalid fusion frame system: {0}")]
    InvalidSystem(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("fixture schema error: {0}")]
    Schema(String),
    #[error("bad dimensions: {0}")]
    BadDims(String),
}

impl Error {
    /// Failures that stem from the mathematics of the input rather than from
    /// malformed usage. The CLI maps these to exit code 2.
    pub fn is_mathematical(&self) -> bool {
        matches!(
            self,
            Error::NotAFrame { .. }
                | Error::HypothesisViolated { .. }
                | Error::NotPD { .. }
                | Error::Singular
                | Error::NotAPerturbation { .. }
                | Error::NotADual(_)
        )
    }
}
