use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("zero distance between antenna {antenna} and target {target}")]
    ZeroDistance { antenna: usize, target: usize },

    #[error("{0} is the zero matrix")]
    ZeroMatrix(&'static str),

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("matrix is not Hermitian (asymmetry {0:e})")]
    NonHermitian(f64),

    #[error("power threshold {requested:e} W exceeds the achievable maximum {maximum:e} W")]
    Infeasible { requested: f64, maximum: f64 },

    #[error("phase undefined: digital weight of chain {0} is zero")]
    UndefinedPhase(usize),

    #[error("digital weights vanish: target beam is orthogonal to every subarray")]
    DegenerateTarget,

    #[error("conic solver failed after {iterations} iterations: {reason}")]
    Solver { iterations: usize, reason: String },

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
