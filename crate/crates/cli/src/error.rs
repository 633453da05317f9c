use std::fmt;

use attractor_core::analytic::AnalyticError;
use attractor_core::attractor::AttractorError;
use attractor_core::continuation::ContinuationError;
use attractor_core::geometry::GeometryError;
use attractor_core::maps::MapError;

/// Failure classes, one per process exit code.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Escape(String),
    Construction(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Escape(_) => 3,
            CliError::Construction(_) => 4,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Escape(m) => write!(f, "orbit escaped: {m}"),
            CliError::Construction(m) => write!(f, "construction failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<AttractorError> for CliError {
    fn from(e: AttractorError) -> Self {
        match e {
            AttractorError::Escape { .. } => CliError::Escape(e.to_string()),
            AttractorError::Map(m) => m.into(),
            AttractorError::Geometry(g) => g.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<AnalyticError> for CliError {
    fn from(e: AnalyticError) -> Self {
        match e {
            AnalyticError::TentSlope(_) | AnalyticError::OutsideLoziRegion { .. } => CliError::Validation(e.to_string()),
            AnalyticError::Construction(_) => CliError::Construction(e.to_string()),
            AnalyticError::Geometry(g) => CliError::Construction(g.to_string()),
        }
    }
}

impl From<ContinuationError> for CliError {
    fn from(e: ContinuationError) -> Self {
        match e {
            ContinuationError::DegenerateCycle(_) | ContinuationError::NoRoot(_) | ContinuationError::NotSaddle => {
                CliError::Construction(e.to_string())
            }
            ContinuationError::Map(m) => m.into(),
            ContinuationError::Attractor(a) => a.into(),
            ContinuationError::Geometry(g) => g.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(format!("config: {e}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("i/o: {e}"))
    }
}
