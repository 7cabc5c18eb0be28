use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("total mass must be positive, got {0}")]
    NonPositiveMass(f64),
    #[error("weights must be finite and non-negative (index {index}: {value})")]
    NegativeWeight { index: usize, value: f64 },
    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),
    #[error("measure must be a probability measure, total mass is {0}")]
    NonProbabilityMass(f64),
    #[error("invalid weight w = {0}; w must be finite and >= 1")]
    InvalidWeight(f64),
    #[error("transport instance is infeasible")]
    InfeasibleInstance,
    #[error("solver did not converge after {pivots} pivots")]
    SolverNonConvergence { pivots: usize },
    #[error("instance {rows}x{cols} is too large for the brute-force oracle")]
    InstanceTooLarge { rows: usize, cols: usize },
    #[error("source atom {0} carries no mass in the coupling")]
    ZeroRowMass(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("loss node has shape {rows}x{cols}, expected a scalar")]
    NonScalarLoss { rows: usize, cols: usize },
    #[error("non-finite activation in layer {0}")]
    NonFiniteActivation(usize),
    #[error("non-finite {which} loss at iteration {iter}: {value}")]
    NonFiniteLoss { which: &'static str, iter: usize, value: f64 },
    #[error("unknown scene `{0}`")]
    UnknownScene(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
