use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("root iteration did not converge after {iterations} iterations (max correction {residual:e})")]
    RootsNotConverged { iterations: usize, residual: f64 },

    #[error("model is unstable: roots {roots:?} have nonnegative real part")]
    Unstable { roots: Vec<(f64, f64)> },

    #[error("matrix exponential overflow (scaled norm {0:e})")]
    ExpOverflow(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
