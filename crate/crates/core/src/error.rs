use thiserror::Error;

/// Errors raised by the estimators, set builders and bound evaluators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is empty")]
    EmptyMatrix,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{which} is rank deficient: rank {rank}, need {required}")]
    RankDeficient {
        which: &'static str,
        rank: usize,
        required: usize,
    },

    #[error("index {index} outside 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("scale must be nonzero")]
    ZeroScale,

    #[error("expected {expected} points, got {got}")]
    WrongCardinality { expected: usize, got: usize },

    #[error("duplicate point at position {0}")]
    DuplicatePoint(usize),

    #[error("point of interest is not a member of the point set")]
    MissingPointOfInterest,

    #[error("point set is not poised for quadratic interpolation")]
    NotPoised,

    #[error("search bound exceeded: dimension {dim} > {max}")]
    SearchBoundExceeded { dim: usize, max: usize },

    #[error("oracle failed at {point:?}: {reason}")]
    Oracle { point: Vec<f64>, reason: String },

    #[error("division by zero at point of interest: |g(x0)| = {0:e}")]
    DivisionByZero(f64),

    #[error("power must be a natural number >= 2, got {0}")]
    InvalidPower(u32),

    #[error("missing Lipschitz constant: {0}")]
    MissingLipschitz(&'static str),

    #[error("radius must be positive ({0})")]
    NonPositiveRadius(&'static str),

    #[error("no candidate for {0} is computable from the supplied inputs")]
    NoCandidate(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
