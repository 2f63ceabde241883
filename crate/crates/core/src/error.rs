use thiserror::Error;

/// Errors raised by the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScrError {
    #[error("invalid argument: {0}")]
    Argument(String),

    /// No sample point falls inside the kernel window around `point`.
    #[error("empty kernel window at {point:?}")]
    EmptyWindow { point: Vec<f64> },

    #[error("singular residualized design (Gram condition number {condition:.3e})")]
    SingularDesign { condition: f64 },

    #[error("degenerate smoother: tr(S)/n >= 1 for every candidate bandwidth")]
    DegenerateSmoother,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl ScrError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        ScrError::Argument(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        ScrError::Data(msg.into())
    }
}

impl From<std::io::Error> for ScrError {
    fn from(e: std::io::Error) -> Self {
        ScrError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ScrError>;
