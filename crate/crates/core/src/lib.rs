//! α-stable traffic modeling, sparse dictionary learning and ADM forecasting
//! for cellular traffic matrices.
//!
//! The numerical core is generic over [`scalar::Scalar`] (`f32` or `f64`).
//! The aliases below fix the scalar to `f64` for everyday use.

pub mod adm;
pub mod eval;
pub mod linalg;
pub mod linear_prediction;
mod quad;
pub mod scalar;
pub mod sparse;
pub mod stable;
pub mod traffic;

pub use adm::{AdmError, SparseMethod};
pub use eval::{EvalError, Method};
pub use linear_prediction::PredictionError;
pub use sparse::{Coder, DictionaryInit, SparseError};
pub use stable::{EstimatorKind, StableError};
pub use traffic::{Service, TrafficError};

pub type Matrix = linalg::Matrix<f64>;
pub type StableParams = stable::StableParams<f64>;
pub type FitReport = stable::FitReport<f64>;
pub type TrafficMatrix = traffic::TrafficMatrix<f64>;
pub type LinearPredictorSpec = linear_prediction::LinearPredictorSpec<f64>;
pub type CoarseForecast = linear_prediction::CoarseForecast<f64>;
pub type SparseCode = sparse::SparseCode<f64>;
pub type DictionaryState = sparse::DictionaryState<f64>;
pub type AdmConfig = adm::AdmConfig<f64>;
pub type AdmState = adm::AdmState<f64>;
pub type AdmForecast = adm::AdmForecast<f64>;
