use flownet_core::analysis::AnalysisError;
use flownet_core::cuts::CutError;
use flownet_core::dynamics::DynamicsError;
use serde_json::json;

use crate::scenario::ScenarioError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    /// Some checked property did not hold; the report has been written.
    #[error("{0}")]
    PropertyFailure(String),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Validation(_) | CliError::Io { .. } => 3,
            CliError::Numerical(_) => 4,
            CliError::PropertyFailure(_) => 5,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse",
            CliError::Validation(_) => "validation",
            CliError::Io { .. } => "io",
            CliError::Numerical(_) => "numerical",
            CliError::PropertyFailure(_) => "property_failure",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({ "error": { "kind": self.kind(), "code": self.exit_code(), "message": self.to_string() } })
    }

    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        if e.is_parse() {
            CliError::Parse(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::InvalidState(_) | DynamicsError::InvalidConfig(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<CutError> for CliError {
    fn from(e: CutError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Dynamics(d) => d.into(),
            AnalysisError::Cut(c) => c.into(),
            AnalysisError::StateLength { .. } | AnalysisError::InvalidConfig(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io { context: String::from("writing CSV"), source: e.into() }
    }
}
