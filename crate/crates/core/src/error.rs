use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("negative moment requested for a law with an atom at zero (gamma = {0})")]
    NegativeMomentOfAtomAtZero(f64),

    #[error("integral diverges: {0}")]
    DivergentIntegral(String),

    #[error("exponent {0} is outside the moment domain")]
    OutOfMomentDomain(f64),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("invalid law: {0}")]
    InvalidLaw(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bad indices: need 2 <= r <= n, got n = {n}, r = {r}")]
    BadIndices { n: usize, r: usize },

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("horizon too large: expected {expected:.3e} particles exceeds the {limit:.0e} guard")]
    HorizonTooLarge { expected: f64, limit: f64 },

    #[error("exact tilting is only available for discrete echo laws")]
    TiltingUnavailable,

    #[error("gamma_sum needs a != b (|a - b| = {0:e})")]
    EqualParameters(f64),

    #[error("moment condition m_k < k m_1 fails at k = {failed_at}; largest valid order is {largest_valid}")]
    MomentCondition { failed_at: usize, largest_valid: usize },

    #[error("limit is degenerate: E[xi log xi] >= m_1")]
    DegenerateLimit,

    #[error("argument outside domain: {0}")]
    OutOfDomain(String),

    #[error("need at least 4 checkpoints spanning 2 decades")]
    InsufficientCheckpoints,

    #[error("need at least {min} samples per side, got {got}")]
    TooFewSamples { min: usize, got: usize },

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

pub type Result<T> = std::result::Result<T, Error>;
