use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit index {index} out of range for {n} qubits")]
    QubitOutOfRange { index: usize, n: usize },

    #[error("classical bit c{index} out of range for {m} classical bits")]
    CbitOutOfRange { index: usize, m: usize },

    #[error("two-qubit gate needs distinct qubits, got {0} twice")]
    DuplicateQubit(usize),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NonUnitary(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("partial trace needs a non-empty set of kept subsystems")]
    EmptyKeep,

    #[error("conditional weight <x|Tr_2 rho|x> = {0:.3e} vanishes; maximizer undefined")]
    VanishingWeight(f64),

    #[error("parameter {name} = {value} outside its domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("paper-strict mode violated: {0}")]
    ModeConstraint(String),

    #[error("parameter mismatch: {0}")]
    ParamMismatch(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
