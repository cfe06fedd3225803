use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the shapekit core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A manifest or data file is malformed. `field` is a dotted path into the document.
    #[error("malformed {field}: {message}")]
    Format { field: String, message: String },

    #[error("dimension mismatch in {field}: expected {expected}, got {actual}")]
    DimensionMismatch {
        field: String,
        expected: usize,
        actual: usize,
    },

    #[error("index {index} out of range for {field} (len {len})")]
    IndexOutOfRange {
        field: String,
        index: usize,
        len: usize,
    },

    #[error("degenerate triangle {triangle}: repeated vertex index")]
    DegenerateTriangle { triangle: usize },

    #[error("mesh is open: boundary edge ({0}, {1})")]
    OpenMesh(u32, u32),

    #[error("inconsistent winding: {0}")]
    InconsistentWinding(String),

    #[error("plane at y = {height} does not intersect the mesh")]
    EmptyIntersection { height: f64 },

    #[error("measurement {name} = {value} outside its valid range")]
    MeasurementOutOfRange { name: &'static str, value: f64 },

    #[error("rank-deficient design matrix ({rows} x {cols}); use ridge > 0")]
    RankDeficient { rows: usize, cols: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("optimizer diverged at iteration {iteration} (loss trace: {trace:?})")]
    Diverged { iteration: usize, trace: Vec<f64> },
}

impl Error {
    /// Stable machine-readable code for each variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::DegenerateTriangle { .. } => "degenerate_triangle",
            Error::OpenMesh(..) => "open_mesh",
            Error::InconsistentWinding(_) => "inconsistent_winding",
            Error::EmptyIntersection { .. } => "empty_intersection",
            Error::MeasurementOutOfRange { .. } => "measurement_out_of_range",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Diverged { .. } => "diverged",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn dims(field: impl Into<String>, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            field: field.into(),
            expected,
            actual,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
