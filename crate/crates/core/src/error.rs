use thiserror::Error;

/// Errors raised by oracles, solvers and the I/O layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported oracle: {0}")]
    Unsupported(String),

    #[error("relu kink: pre-activation {value:e} is within 1e-12 of zero")]
    ReluKink { value: f64 },

    #[error("curvature condition violated: s.y = {sy:e}")]
    Curvature { sy: f64 },

    #[error("line search failed: {0}")]
    LineSearch(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid label on line {line}: {label}")]
    Label { line: usize, label: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }

    /// Whether the error stems from bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Shape { .. }
                | Error::InvalidArgument(_)
                | Error::Unsupported(_)
                | Error::Parse { .. }
                | Error::Label { .. }
                | Error::Config(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
