use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {n}: {reason}")]
    InvalidDimension { n: usize, reason: &'static str },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("degenerate spectrum: eigenvalues {i} and {j} are {gap:e} apart (tolerance {tolerance:e})")]
    DegenerateSpectrum {
        i: usize,
        j: usize,
        gap: f64,
        tolerance: f64,
    },

    #[error("right-eigenvector basis is ill conditioned (condition number {condition:e})")]
    IllConditionedBasis { condition: f64 },

    #[error("eigenvalues do not pair under conjugation (eigenvalue {index}, mismatch {mismatch:e})")]
    UnpairedEigenvalue { index: usize, mismatch: f64 },

    #[error("eigensolver failed to converge")]
    SolverFailure,

    #[error("eigenvalue {index} is real; the conjugate term is undefined")]
    RealEigenvalue { index: usize },

    #[error("matrix is not circulant (entry ({row}, {col}) breaks the pattern)")]
    NotCirculant { row: usize, col: usize },

    #[error("matrix is not normal (eigenvalue {index} has condition number {kappa})")]
    NotNormal { index: usize, kappa: f64 },

    #[error("division by zero: the two points coincide")]
    DivisionByZero,

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("time grid is not strictly increasing at position {0}")]
    NonMonotoneGrid(usize),

    #[error("time {t} is outside the path domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("assignment between samples at t = {t} is ambiguous (cost gap {gap:e})")]
    MatchingAmbiguous { t: f64, gap: f64 },

    #[error("failed at t = {t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed input: {0}")]
    Format(String),
}

impl Error {
    /// Attaches the path parameter at which a computation failed.
    pub fn at(self, t: f64) -> Self {
        match self {
            Error::AtTime { .. } => self,
            other => Error::AtTime {
                t,
                source: Box::new(other),
            },
        }
    }

    /// The innermost error, with any time annotation stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtTime { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
