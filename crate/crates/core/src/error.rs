use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("NaN or -inf is not a min-plus value")]
    InvalidValue,

    #[error("negative cycle through node {node}: Kleene star diverges")]
    NegativeCycle { node: usize },

    #[error("row {row} of the matrix is entirely +inf")]
    InfiniteCoordinate { row: usize },

    #[error("point has a non-finite coordinate")]
    NonFinitePoint,

    #[error("sample is empty")]
    EmptySample,

    #[error("point violates constraint x_{i} - x_{j} <= c_{i}{j} by {excess}", i = .i + 1, j = .j + 1)]
    PointOutside { i: usize, j: usize, excess: f64 },

    #[error("degenerate polytrope: {0}")]
    Degenerate(String),

    #[error("cell cannot be realized by a point of the polytrope")]
    UnrealizableCell,

    #[error("edge {from} -> {to} is invalid: {reason}")]
    InvalidEdge {
        from: usize,
        to: usize,
        reason: &'static str,
    },

    #[error("edge probability must lie in (0, 1], got {0}")]
    InvalidProbability(f64),

    #[error("weight interval half-width must be finite and >= 0, got {0}")]
    InvalidInterval(f64),

    #[error("invalid innovation law: {0}")]
    InvalidInnovation(String),

    #[error("invalid score config: {0}")]
    InvalidScore(String),

    #[error("too few observations: need {needed}, have {have}")]
    TooFewObservations { needed: usize, have: usize },

    #[error("universe element {from} -> {to} is in no cell")]
    UncoverableElement { from: usize, to: usize },

    #[error("subdivision too large for bitset covers ({0} elements, max 128)")]
    UniverseTooLarge(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("all {0} rows were dropped during preprocessing")]
    AllRowsDropped(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the error stems from input data rather than configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::AllRowsDropped(_)
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
                | Error::EmptySample
                | Error::TooFewObservations { .. }
                | Error::NonFinitePoint
                | Error::DimensionMismatch { .. }
        )
    }
}
