//! Error taxonomy shared by every module.
//!
//! The CLI maps these onto process exit codes: configuration problems
//! exit 2, solver failures 3, accuracy failures 4.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PbError {
    /// Bad configuration: unknown keys, invalid parameter combinations.
    #[error("config error: {0}")]
    Config(String),

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition was violated by the caller.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A quadrature or tabulation could not reach its accuracy target.
    /// Carries the best estimate and the error bound actually achieved.
    #[error("accuracy target missed in {what}: estimate {estimate:e}, bound {bound:e}")]
    Accuracy {
        what: String,
        estimate: f64,
        bound: f64,
    },

    /// Linear solve failed (singular or severely ill-conditioned system).
    #[error("solver error: {0}")]
    Solver(String),

    /// An iteration hit its cap before meeting its tolerance.
    #[error("{what} did not converge: residual {residual:e}")]
    NonConvergence { what: String, residual: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PbError>;

impl PbError {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            PbError::Config(_) | PbError::Precondition(_) | PbError::Domain(_) => 2,
            PbError::Accuracy { .. } => 4,
            _ => 3,
        }
    }
}
