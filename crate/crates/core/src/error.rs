//! Error type shared by every module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse grouping used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed input files or arguments.
    Schema,
    /// A numerical procedure failed or did not converge.
    Numeric,
    /// A well-formed request that lies outside the domain of an operation.
    Domain,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("state is not normalized (squared norm {norm_sqr:.3e})")]
    NotNormalized { norm_sqr: f64 },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("control schedule covers [{start}, {end}] but [{t0}, {t1}] was requested")]
    ScheduleCoverage { start: f64, end: f64, t0: f64, t1: f64 },

    #[error("control value {value} outside [{lo}, {hi}] on channel {channel}")]
    ControlOutOfDomain { channel: usize, value: f64, lo: f64, hi: f64 },

    #[error("eigenvalue {value} has zero probability for this state")]
    ZeroProbability { value: f64 },

    #[error("eigenvalue {value} not in the spectrum")]
    UnknownEigenvalue { value: f64 },

    #[error("basis is degenerate: eigenvalue {value} has multiplicity {multiplicity}")]
    DegenerateBasis { value: f64, multiplicity: usize },

    #[error("momentum ({k1}, {k2}) leaves the truncation box of radius {radius}")]
    TruncationOverflow { k1: i64, k2: i64, radius: i64 },

    #[error("invalid cat map: {0}")]
    InvalidCatMap(String),

    #[error("closure is already fully controllable; a steering frame is unnecessary")]
    FrameUnnecessary,

    #[error("no steering frame found within budget ({evaluations} evaluations)")]
    FrameNotFound { evaluations: usize },

    #[error("maximum iterations ({0}) exceeded")]
    MaxIterations(usize),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Schema(_) | Error::Io(_) => ErrorClass::Schema,
            Error::Numeric(_) | Error::MaxIterations(_) | Error::FrameNotFound { .. } => {
                ErrorClass::Numeric
            }
            _ => ErrorClass::Domain,
        }
    }
}

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
