use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input value that cannot be processed (non-finite, wrong sign, ...).
    #[error("rejected input: {0}")]
    InvalidInput(String),

    /// Arguments outside the domain where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate distance: point {point:?} coincides with transducer {index}")]
    DegenerateDistance { index: usize, point: [f64; 3] },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("{0}: file contains no data rows")]
    EmptyFile(PathBuf),

    #[error("no periodicity detected (best autocorrelation {best_correlation:.3})")]
    NoPeriodicity { best_correlation: f64 },

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("fit did not converge after {iterations} iterations (best h={best_h}, k={best_k}, rms={best_rms})")]
    NotConverged {
        iterations: usize,
        best_h: f64,
        best_k: f64,
        best_rms: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
