use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("parse error at position {position} in `{input}`: {message}")]
    Parse {
        input: String,
        position: usize,
        message: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("degenerate window: {0}")]
    DegenerateWindow(String),

    #[error("interior comparison window is empty (N1 = {n1}, margin = {margin})")]
    EmptyInterior { n1: usize, margin: usize },

    #[error("grid has no boundary pixels")]
    EmptyBoundary,

    #[error("configuration is not transient: the infinite product of probabilities vanishes")]
    NotTransient,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(input: &str, position: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            input: input.to_string(),
            position,
            message: message.into(),
        }
    }
}
