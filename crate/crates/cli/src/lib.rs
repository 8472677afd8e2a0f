//! Command implementations behind the `visavis` binary: config
//! resolution, run-directory management, and manifests.

pub mod commands;
pub mod config;
pub mod manifest;

/// Errors split by exit code: configuration problems exit 2, runtime
/// failures exit 3.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Runtime(msg) => write!(f, "runtime error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<visavis::selfplay::TrainError> for CliError {
    fn from(e: visavis::selfplay::TrainError) -> Self {
        match e {
            visavis::selfplay::TrainError::InvalidConfig(msg) => CliError::Config(msg),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<visavis::neural::NeuralError> for CliError {
    fn from(e: visavis::neural::NeuralError) -> Self {
        match e {
            visavis::neural::NeuralError::InvalidConfig(msg) => CliError::Config(msg),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<visavis::analysis::AnalysisError> for CliError {
    fn from(e: visavis::analysis::AnalysisError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<visavis::oracle::OracleError> for CliError {
    fn from(e: visavis::oracle::OracleError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<visavis::game::GameError> for CliError {
    fn from(e: visavis::game::GameError) -> Self {
        match e {
            visavis::game::GameError::Parse(msg) => CliError::Config(format!("parse error: {msg}")),
            other => CliError::Config(other.to_string()),
        }
    }
}
