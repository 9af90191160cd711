use std::path::PathBuf;

/// Errors raised anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Mismatched vector or matrix sizes.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An argument outside its admissible range.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A numerical routine failed, e.g. a divergent integral.
    #[error("computation failed for {what}: {reason}")]
    Computation { what: String, reason: String },

    /// The normal equations of an unregularised fit are singular.
    #[error("rank-deficient design matrix (rank {rank} of {cols}); retry with a positive ridge parameter")]
    RankDeficient { rank: usize, cols: usize },

    /// A frequency density vanishes where the Fourier transform does not.
    #[error("density vanishes at {point:?} where |f^| = {fhat_abs:e}")]
    AbsoluteContinuity { point: Vec<f64>, fhat_abs: f64 },

    /// Experiment configuration problems.
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn computation(what: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Computation {
            what: what.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Dimension(_) | Error::Argument(_) | Error::Config(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
