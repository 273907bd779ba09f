use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Euler propagation became non-finite after {step} steps; reduce dt (currently {dt:e})")]
    StepSize { step: usize, dt: f64 },

    #[error("Arnoldi did not converge after {restarts} restarts (residuals {residuals:?})")]
    NoConvergence { restarts: usize, residuals: Vec<f64> },

    #[error("dense oracle limited to D <= {max}, got D = {dim}")]
    OracleTooLarge { dim: usize, max: usize },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("numerical state error: {0}")]
    NumericalState(String),

    #[error("quadrature error: {0}")]
    Quadrature(String),

    #[error("degenerate projection: tr(P+ rho P+) = {0:e}")]
    DegenerateProjection(f64),

    #[error("{0}")]
    Config(crate::cli::config::ConfigErrors),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
