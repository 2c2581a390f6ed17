use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: &'static str, reason: String },

    /// The compliance rate is large enough that a sub-threshold stretch could
    /// move a point by more than one rest length in a single substep.
    #[error("unstable configuration: c·(θ·l)·Δt²/2 = {value} µm must stay below l = {rest_length} µm")]
    Stability { value: f64, rest_length: f64 },

    #[error("discretization: {0}")]
    Discretization(String),

    #[error("segment {segment} has coincident endpoints; direction is undefined")]
    CoincidentPoints { segment: usize },

    #[error("segment index {index} out of range for a chain with {segments} segments")]
    SegmentOutOfRange { index: usize, segments: usize },

    #[error("no quiescence after {sweeps} sweeps (max residual elongation {residual} µm)")]
    NonConvergence { sweeps: usize, residual: f64 },

    #[error("schedule: {0}")]
    Schedule(String),

    #[error("chains differ in point count ({left} vs {right})")]
    MismatchedChains { left: usize, right: usize },

    #[error("{0}")]
    Metric(String),

    #[error(transparent)]
    Scenario(#[from] ScenarioError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Scenario loading failures, carrying enough location detail to point at
/// the offending line or field.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema violation at `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("unresolved reference at `{field}`: {message}")]
    Reference { field: String, message: String },
}

impl ScenarioError {
    pub fn field(&self) -> Option<&str> {
        match self {
            ScenarioError::Parse { .. } => None,
            ScenarioError::Schema { field, .. } | ScenarioError::Reference { field, .. } => {
                Some(field)
            }
        }
    }

    pub(crate) fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Schema {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn reference(field: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Reference {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<serde_json::Error> for ScenarioError {
    fn from(e: serde_json::Error) -> Self {
        ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}
