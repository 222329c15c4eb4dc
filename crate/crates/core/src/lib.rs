//! Shifted losses, heavy-tailed synthetic laws and kernel-based quantile
//! regression.

pub mod constructions;
pub mod csv;
pub mod data;
pub mod distributions;
pub mod error;
pub mod experiment;
pub mod kernel;
pub mod loss;
pub mod plot;
pub mod predictor;
pub mod quadrature;
pub mod risk;
pub mod seed;
pub mod svm;

pub use error::{Error, Result};
pub use kernel::KernelSpec;
pub use loss::LossSpec;
pub use predictor::{PiecewisePredictor, Predictor};
