use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("{0:?} gate requires a rotation angle")]
    MissingAngle(crate::qcore::GateKind),

    #[error("{kind:?} gate expects {expected} target(s), got {got}")]
    TargetArity {
        kind: crate::qcore::GateKind,
        expected: usize,
        got: usize,
    },

    #[error("control and target qubit must differ (both {0})")]
    DuplicateTarget(usize),

    #[error("probability {0} outside [0, 1]")]
    Probability(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("pure-state simulation cannot apply a noise policy")]
    NoiseInPureMode,

    #[error("operation requires noiseless (pure) execution")]
    RequiresPureMode,

    #[error("invalid encoding input: {0}")]
    Encoding(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("class {0} has no samples")]
    EmptyClass(usize),

    #[error("class {class} has {available} samples, {requested} requested")]
    InsufficientClass {
        class: usize,
        available: usize,
        requested: usize,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
