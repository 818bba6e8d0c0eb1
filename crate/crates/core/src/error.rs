use thiserror::Error;

/// Errors raised across the crate.
///
/// Variants are grouped by the layer that produces them; stage failures in the
/// experiment runner wrap these with the stage name.
#[derive(Debug, Error)]
pub enum Error {
    #[error("undefined direction at origin")]
    OriginDirection,

    #[error("zero vector has no direction")]
    ZeroDirection,

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("window mismatch: {0}")]
    WindowMismatch(String),

    #[error("representation mismatch: expected {expected}, found {found}")]
    Representation { expected: String, found: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operator is not unitary: defect {defect:.3e} exceeds {tol:.1e}")]
    NotUnitary { defect: f64, tol: f64 },

    #[error("operator is singular: smallest singular value {sigma_min:.3e} below {tol:.1e}")]
    Singular { sigma_min: f64, tol: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("precondition failed for pair {index}: norm {norm:.3e} exceeds budget {budget:.3e}")]
    PairBudget { index: usize, norm: f64, budget: f64 },

    #[error("window exhausted before placing center {index}")]
    WindowExhausted { index: usize },

    #[error("column of center {index} vanishes")]
    VanishingColumn { index: usize },

    #[error("support of center {index} leaks outside its range by {leak:.3e}")]
    SupportLeak { index: usize, leak: f64 },

    #[error("region misses directions: {0}")]
    UncoveredDirections(String),

    #[error("block form violated: {0}")]
    BlockForm(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("boundary-contaminated spectrum: {0}; try a larger window")]
    BoundaryContaminated(String),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("dimension mismatch: header declares {declared}, window has {actual}")]
    DimensionMismatch { declared: usize, actual: usize },

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("config validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(pos: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            pos,
            msg: msg.into(),
        }
    }

    /// Wrap an error with the name of the pipeline stage that raised it.
    pub fn in_stage(self, stage: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
