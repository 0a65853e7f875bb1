use std::path::PathBuf;

use crate::linalg::ComplexVector;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("power iteration did not converge after {iterations} iterations (last eigenvalue {value:e})")]
    Convergence {
        iterations: usize,
        value: f64,
        vector: ComplexVector,
    },

    #[error("invalid value for `{key}`: {value} (accepted: {accepted})")]
    InvalidParameter {
        key: String,
        value: String,
        accepted: String,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate channel: effective desired-signal gain is zero")]
    DegenerateChannel,

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(key: &str, value: impl ToString, accepted: &str) -> Self {
        Error::InvalidParameter {
            key: key.to_string(),
            value: value.to_string(),
            accepted: accepted.to_string(),
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for input/configuration problems, false for failures that
    /// happen while running a valid experiment.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidParameter { .. } | Error::Config(_) => true,
            Error::Context { source, .. } => source.is_validation(),
            _ => false,
        }
    }

    /// Process exit code: 1 for validation errors, 2 for runtime errors.
    pub fn exit_code(&self) -> i32 {
        if self.is_validation() {
            1
        } else {
            2
        }
    }
}
