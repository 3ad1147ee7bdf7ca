use std::path::PathBuf;

use crate::numerics::Rank1Triplet;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure {
        iterations: usize,
        residual: f64,
        last: Box<Rank1Triplet>,
    },

    #[error("direction is numerically inside the span of the basis (residual norm {residual:e})")]
    DegenerateDirection { residual: f64 },

    #[error("interference matrix is numerically singular with alpha = {alpha:e}; use a larger regularizer")]
    Regularization { alpha: f64 },

    #[error("beamformer product has zero Frobenius norm")]
    DegenerateBeamformer,

    #[error("post-combining noise covariance is singular")]
    DegenerateCombiner,

    #[error("search space of {size} points exceeds the limit of {limit}")]
    TooLarge { size: f64, limit: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-friendly tag used in CSV error columns.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::ConvergenceFailure { .. } => "convergence-failure",
            Error::DegenerateDirection { .. } => "degenerate-direction",
            Error::Regularization { .. } => "regularization",
            Error::DegenerateBeamformer => "degenerate-beamformer",
            Error::DegenerateCombiner => "degenerate-combiner",
            Error::TooLarge { .. } => "too-large",
            Error::Invariant(_) => "invariant",
            Error::Config(_) => "config",
            Error::Parse(_) => "parse",
            Error::Io { .. } => "io",
        }
    }
}
