use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Stieltjes transform evaluated on the real axis (z = {re} + {im}i)")]
    RealAxisEvaluation { re: f64, im: f64 },

    #[error("empty spectrum")]
    EmptySpectrum,

    #[error("moment of order {0} is not supported (k <= 4)")]
    UnsupportedOrder(u32),

    #[error("pole hit in the amplitude integral: |1 + tau f| = {0:e}")]
    PoleHit(f64),

    #[error("fixed-point iteration did not converge at lambda = {lambda}, eps = {eps:e} (residual {residual:e} after {iterations} iterations)")]
    NonConvergence {
        lambda: f64,
        eps: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("converged point left the Stieltjes class: Im f * Im z = {0:e}")]
    BranchViolation(f64),

    #[error("limit measure carries total mass {0}, grid does not cover the support")]
    MassDeficit(f64),

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("invalid l_p exponent {0} (need p >= 1)")]
    InvalidP(f64),

    #[error("H0 does not match the ensemble dimension: expected {expected}, got {got}")]
    H0Mismatch { expected: usize, got: usize },

    #[error("tridiagonal eigenvalue iteration did not converge for eigenvalue {0}")]
    NoConvergence(usize),

    #[error("rank-one resolvent update hit a near-singular denominator |1 + tau Y G Y| = {0:e}")]
    NearSingularDenominator(f64),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
