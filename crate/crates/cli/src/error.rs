use std::path::Path;

use elivagar::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
        CliError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        }
    }

    /// 2: bad configuration or inputs, 3: every candidate rejected, 4: I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 4,
            CliError::Core(e) => match e {
                CoreError::NoSurvivors => 3,
                CoreError::Io(_) => 4,
                CoreError::InvalidConfig { .. }
                | CoreError::DataDimension { .. }
                | CoreError::InvalidDevice(_)
                | CoreError::InvalidCircuit(_)
                | CoreError::NoSubgraph(_)
                | CoreError::MissingCalibration(_)
                | CoreError::Parse { .. }
                | CoreError::InvalidDataset(_)
                | CoreError::TooManyQubits { .. }
                | CoreError::InsufficientSamples { .. }
                | CoreError::Serde(_) => 2,
                _ => 1,
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
