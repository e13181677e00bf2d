use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },
    #[error("gram matrix of the measurement ensemble is singular (min/max eigenvalue ratio {ratio:e})")]
    GramSingular { ratio: f64 },
    #[error("singular value decomposition failed")]
    SvdFailure,
    #[error("power iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("subspaces are too close for a convergent Neumann series: angle {angle}")]
    AngleTooLarge { angle: f64 },
    #[error("Neumann series diverged: last term norm {last_term:e} after {terms} terms")]
    NeumannDivergence { last_term: f64, terms: usize },
    #[error("Bernoulli partition parameter {q} lies outside (0, 1]")]
    BernoulliPartition { q: f64 },
    #[error("insufficient measurements: {q} measurements for {blocks} golfing blocks")]
    InsufficientMeasurements { q: usize, blocks: usize },
    #[error("pairwise subspace angle {angle} violates the bound {bound}")]
    AngleViolation { angle: f64, bound: f64 },
    #[error("low-rank component is zero")]
    ZeroLowRank,
    #[error("ensemble needs {needed} bytes, above the cap of {cap} bytes")]
    MemoryCap { needed: u64, cap: u64 },
    #[error("operation not supported: {0}")]
    Unsupported(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
            _ => Error::Parse(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn mismatch(expected: impl ToString, got: impl ToString) -> Error {
    Error::DimensionMismatch {
        expected: expected.to_string(),
        got: got.to_string(),
    }
}
