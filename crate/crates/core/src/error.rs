use thiserror::Error;

/// Errors raised anywhere in the curvature engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {0} outside supported range 1..=6")]
    Dimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point lies on the singular locus of model `{0}`")]
    SingularLocus(String),

    #[error("non-finite metric value at the requested point")]
    NonFinite,

    #[error("metric is not positive definite (pivot {pivot} = {value:e})")]
    NotPositive { pivot: usize, value: f64 },

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("invalid finite-difference step {0:e}")]
    InvalidStep(f64),

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown identifier `{name}` at line {line}, column {column}")]
    UnknownIdentifier {
        name: String,
        line: usize,
        column: usize,
    },

    #[error("variable index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("division by zero during evaluation")]
    DivisionByZero,

    #[error("log of a value that is not real positive: {0}")]
    LogDomain(String),

    #[error("metric file: {0}")]
    SpecFile(String),

    #[error("connection is not in the space of J-compatible metric connections (-λ+μ+1/2 = {0})")]
    NotJCompatible(f64),

    #[error("θ field undefined at the requested point: {0}")]
    ThetaUndefined(String),

    #[error("parameter outside positivity domain {0}")]
    ParameterDomain(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
