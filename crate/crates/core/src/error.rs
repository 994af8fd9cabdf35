use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {file} line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("node index {index} out of range for {n_nodes} nodes")]
    NodeOutOfRange { index: usize, n_nodes: usize },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("missing labels: {0}")]
    MissingLabels(String),

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("stale cache: parameters changed since the forward pass")]
    StaleCache,

    #[error("collapsed embedding: column {0} has zero variance")]
    CollapsedEmbedding(usize),

    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },

    #[error("bad parameter file: {0}")]
    BadParamFile(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error report.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MissingFile(_) => "missing_file",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::NodeOutOfRange { .. } => "node_out_of_range",
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Infeasible(_) => "infeasible",
            Error::Empty(_) => "empty_input",
            Error::MissingLabels(_) => "missing_labels",
            Error::Degenerate(_) => "degenerate",
            Error::StaleCache => "stale_cache",
            Error::CollapsedEmbedding(_) => "collapsed_embedding",
            Error::Diverged { .. } => "diverged",
            Error::BadParamFile(_) => "bad_param_file",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
