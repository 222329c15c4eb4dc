use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("point {0:?} lies outside the support of the marginal")]
    OutsideSupport(Vec<f64>),

    #[error("solver did not converge after {iterations} sweeps (duality gap {gap:.3e}, stationarity {stationarity:.3e})")]
    NonConvergence {
        iterations: usize,
        gap: f64,
        stationarity: f64,
    },

    #[error("quadrature did not reach tolerance: estimate {value}, error bound {error:.3e}")]
    Quadrature { value: f64, error: f64 },

    #[error("approximation error {achieved:.3e} exceeds budget {budget:.3e}")]
    ApproximationBudget { achieved: f64, budget: f64 },

    #[error("could not parse {what}: {input:?}")]
    Parse { what: &'static str, input: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
