use std::path::PathBuf;

use crate::sim::GateKind;

/// Errors raised anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{kind:?} expects {expected} parameter(s), got {got}")]
    ParamCount {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("{kind:?} acts on {expected} target(s), got {got}")]
    TargetCount {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("{0:?} requires at least one control qubit")]
    MissingControl(GateKind),
    #[error("qubit {qubit} used more than once in a gate")]
    DuplicateQubit { qubit: usize },
    #[error("qubit index {qubit} out of range for {num_qubits} qubit(s)")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{num_qubits} qubits exceeds the density-matrix limit of {max}")]
    TooManyQubits { num_qubits: usize, max: usize },
    #[error("training runs on the ideal backend only")]
    NoisyGradient,
    #[error("unsupported schema_version {0}")]
    SchemaVersion(u32),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("IDX data error: {0}")]
    Idx(String),
    #[error("not enough samples: requested {requested}, available {available}")]
    InsufficientSamples { requested: usize, available: usize },
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by input data (files, datasets, model files)
    /// as opposed to an inconsistent experiment setup.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Idx(_)
                | Error::InsufficientSamples { .. }
                | Error::Json(_)
                | Error::Csv(_)
                | Error::SchemaVersion(_)
                | Error::Schema(_)
        )
    }
}
