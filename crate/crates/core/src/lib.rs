pub mod autodiff;
pub mod datasets;
pub mod error;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod trainer;
pub use error::{Error, Result};

/// Default-precision aliases; every module stays generic over
/// [`scalar::Scalar`] so `f32` variants are one type parameter away.
pub type Tensor = autodiff::Tensor<f64>;
pub type Tape = autodiff::Tape<f64>;
pub type Optimizer = autodiff::Optimizer<f64>;
pub type FairModel = model::FairModel<f64>;
pub type LossWeights = losses::LossWeights<f64>;
