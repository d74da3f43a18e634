use thiserror::Error;

/// Errors produced by the solver, the diagnostics and the I/O layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("non-finite value at point {index} (component {component})")]
    NonFinite { component: usize, index: usize },

    #[error("coefficients are not Hermitian-symmetric: mode {index} differs from the conjugate of its mirror by {defect:e}")]
    NotHermitian { index: usize, defect: f64 },

    #[error("field mismatch: {0}")]
    Mismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("solver blow-up at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("csv error: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
