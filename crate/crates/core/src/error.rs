use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for {len} components")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("inadmissible step size {eta}: bound is {bound} ({rule})")]
    InadmissibleStep { eta: f64, bound: f64, rule: &'static str },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("reference solve did not converge: gradient norm {grad_norm:e} > tolerance {tolerance:e} after {iterations} iterations")]
    NotConverged {
        grad_norm: f64,
        tolerance: f64,
        iterations: usize,
    },

    #[error("all {0} repetitions diverged")]
    AllDiverged(usize),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NotConverged { .. } | Error::AllDiverged(_))
    }
}
