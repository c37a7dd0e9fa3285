use thiserror::Error;

/// Errors raised by the search toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("invalid device model: {0}")]
    InvalidDevice(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid configuration field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("parameter vector has length {actual}, circuit needs {expected}")]
    ParameterLength { expected: usize, actual: usize },
    #[error("data vector has {actual} dimensions, circuit embeds dimension {needed}")]
    DataDimension { needed: usize, actual: usize },
    #[error("circuit has {n_qubits} qubits, simulator cap is {cap}")]
    TooManyQubits { n_qubits: usize, cap: usize },
    #[error("gate {0:?} is not supported by this backend")]
    UnsupportedGate(crate::model::GateKind),
    #[error("measured qubit set is empty")]
    EmptyMeasurement,
    #[error("no connected subgraph with {0} qubits exists on the device")]
    NoSubgraph(usize),
    #[error("missing calibration: {0}")]
    MissingCalibration(String),
    #[error("class {class} has {available} training samples, {needed} required")]
    InsufficientSamples {
        class: usize,
        available: usize,
        needed: usize,
    },
    #[error("no candidate circuit survived noise-guided rejection")]
    NoSurvivors,
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("{path}: line {line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("io error: {0}")]
    Io(String),
    #[error("serialization error: {0}")]
    Serde(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl Error {
    pub(crate) fn config(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
