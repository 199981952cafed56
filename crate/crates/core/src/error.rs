use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid interval ({lo}, {hi})")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("invalid function: {0}")]
    InvalidFunction(String),
    #[error("point {x} lies outside the domain")]
    OutOfDomain { x: f64 },
    #[error("point {x} is a jump; use one-sided limits")]
    Discontinuity { x: f64 },
    #[error("integral diverges near {near}")]
    NonIntegrable { near: f64 },
    #[error("weight has no derivative density")]
    MissingDerivative,
    #[error("weight takes the negative value {value} at {x}")]
    NegativeWeight { x: f64, value: f64 },
    #[error("the weight degenerates everywhere: no nondegenerate interval")]
    EmptyDecomposition,
    #[error("set [{lo}, {hi}] is not compactly contained in a nondegenerate interval")]
    NotCompactlyContained { lo: f64, hi: f64 },
    #[error("ordering violated: {0}")]
    OrderingViolation(String),
    #[error("function is outside the finiteness domain")]
    NotInDomain,
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("h = {h}: derivative approximation error {achieved} above target {target}")]
    ScheduleUnreachable { h: usize, achieved: f64, target: f64 },
    #[error("h = {h} not admissible: 1/h must be below {bound}")]
    HNotAdmissible { h: usize, bound: f64 },
    #[error("convergence not established: {0}")]
    ConvergenceNotEstablished(String),
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("weight is not strictly positive on the region")]
    NotPositive,
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
