use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid head box: {0}")]
    InvalidBox(String),

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("{0}")]
    InvalidInput(String),

    #[error("record `{0}` has no frame index")]
    MissingFrameIndex(String),

    #[error("insufficient negatives for {task}: needed {needed}, available {available} (deficit {})", needed - available)]
    InsufficientNegatives {
        task: String,
        needed: usize,
        available: usize,
    },

    #[error("no disjoint placement for a {width:.4}x{height:.4} box in `{image_ref}`")]
    NoDisjointPlacement {
        image_ref: String,
        width: f64,
        height: f64,
    },

    #[error("no records")]
    NoRecords,

    #[error("AP undefined: no positive labels")]
    ApUndefined,

    #[error("degenerate direction: point coincides with the head center")]
    DegenerateDirection,

    #[error("heterogeneous prediction tasks: {0}")]
    HeterogeneousTasks(String),

    #[error("prediction for `{0}` has no gaze point")]
    MissingPoint(String),

    #[error("records without ground truth: {}", .0.join(", "))]
    UnmatchedRecords(Vec<String>),

    #[error("missing exemplar bank for {0}")]
    MissingExemplars(String),

    #[error("coordinate {0} outside [0, 1]")]
    CoordinateOverflow(f64),

    #[error("template mismatch: {0}")]
    TemplateMismatch(String),

    #[error("duplicate sample `{0}` within one export pass")]
    DuplicateSample(String),

    #[error("missing corpus: {0}")]
    MissingCorpus(String),

    #[error("unknown sample `{0}`")]
    UnknownSample(String),

    #[error("image error: {0}")]
    Image(String),

    #[error("transport failed after {} attempt(s): {message}", attempts.len())]
    Transport {
        message: String,
        attempts: Vec<crate::gateway::AttemptRecord>,
    },

    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },

    #[error("auth token variable `{0}` is not set")]
    MissingAuthToken(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
