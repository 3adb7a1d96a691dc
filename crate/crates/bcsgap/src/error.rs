use thiserror::Error;

/// Errors produced by the solvers and quadrature routines.
#[derive(Debug, Error)]
pub enum BcsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge ({context}); residual estimate {residual:.3e}")]
    QuadratureNonConvergent { context: String, residual: f64 },

    #[error("bound state obstructs the zero-energy solve: {0}")]
    BoundState(String),

    #[error("zero-energy resonance: {0}")]
    ZeroEnergyResonance(String),

    #[error("gap iteration collapsed to the trivial solution: {0}")]
    TrivialSolution(String),

    #[error("iteration did not converge within {iterations} iterations; last error estimate {residual:.3e}")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("bracketing failed: {0}")]
    Bracketing(String),

    #[error("interpolation outside tabulated range: {0}")]
    OutOfRange(String),

    #[error("inconsistent solution: {0}")]
    InconsistentSolution(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, BcsError>;

impl BcsError {
    /// Process exit code convention: 2 for bad arguments, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            BcsError::InvalidArgument(_) => 2,
            _ => 3,
        }
    }
}
