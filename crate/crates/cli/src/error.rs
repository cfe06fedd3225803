use std::path::Path;

use serde_json::{json, Value};

/// Error printed as `{code, message, context}` on stderr.
#[derive(Debug)]
pub struct CliError {
    pub code: String,
    pub message: String,
    pub context: Value,
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.into(),
            message: message.into(),
            context: json!({}),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new("invalid_argument", message)
    }

    pub fn format(field: impl Into<String>, message: impl Into<String>) -> Self {
        let field = field.into();
        let message = message.into();
        Self::new("format", format!("malformed {field}: {message}")).with("field", field)
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::new("io", format!("I/O error on {}: {err}", path.display())).with("path", path.display().to_string())
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        if let Value::Object(map) = &mut self.context {
            map.insert(key.into(), value.into());
        }
        self
    }

    pub fn to_json(&self) -> String {
        json!({ "code": self.code, "message": self.message, "context": self.context }).to_string()
    }
}

impl From<shapekit::Error> for CliError {
    fn from(e: shapekit::Error) -> Self {
        use shapekit::Error as E;
        let mut out = CliError::new(e.code(), e.to_string());
        out = match &e {
            E::Io { path, .. } => out.with("path", path.display().to_string()),
            E::Format { field, .. } => out.with("field", field.as_str()),
            E::DimensionMismatch { field, expected, actual } => out
                .with("field", field.as_str())
                .with("expected", *expected)
                .with("actual", *actual),
            E::IndexOutOfRange { field, index, len } => {
                out.with("field", field.as_str()).with("index", *index).with("len", *len)
            }
            E::DegenerateTriangle { triangle } => out.with("triangle", *triangle),
            E::OpenMesh(a, b) => out.with("edge", vec![*a, *b]),
            E::EmptyIntersection { height } => out.with("height", *height),
            E::MeasurementOutOfRange { name, value } => out.with("measurement", *name).with("value", *value),
            E::RankDeficient { rows, cols } => out.with("rows", *rows).with("cols", *cols),
            E::Diverged { iteration, trace } => out.with("iteration", *iteration).with("trace", trace.clone()),
            E::InconsistentWinding(_) | E::InvalidArgument(_) => out,
        };
        out
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::new("format", format!("CSV error: {e}"))
    }
}
