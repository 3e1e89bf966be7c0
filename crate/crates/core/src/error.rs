use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty grid")]
    EmptyGrid,

    #[error("operation `{op}` is not supported for {repr}; {hint}")]
    Unsupported {
        op: &'static str,
        repr: String,
        hint: &'static str,
    },

    #[error("moment diverged: result is not finite")]
    MomentDivergence,

    #[error("no covering construction known for d = {dim}, r = {r}")]
    NoCoveringConstruction { dim: usize, r: String },

    #[error("center {index} is off the unit sphere: |c| = {norm}")]
    OffSphere { index: usize, norm: f64 },

    #[error("origin cell of the base grid is unbounded")]
    UnboundedCell,

    #[error("evaluator inconsistency: {0}")]
    EvaluatorInconsistency(String),

    #[error("odd power p = {0} has no analytic evaluation path")]
    OddPower(f64),

    #[error("experiment configuration: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
