//! Drug-footprint ECG classification at desk scale.
//!
//! The crate bundles the full pipeline: a signal layer (sampling, spline
//! resampling, standardization, heart-rate estimation), a reverse-mode
//! differentiation kernel sized for the classifier, the multi-branch
//! CNN-BiLSTM model itself, a synthetic dataset generator with a
//! controllable footprint, and the robustness evaluation framework
//! (protocol zones, accuracy-parity difference, Youden heart-rate
//! thresholds).
//!
//! Network code is generic over the scalar type; training runs in `f32`
//! while verification code instantiates the same graphs in `f64`.

pub mod error;
pub mod scalar;
pub mod signal;

pub mod data;
pub mod eval;
pub mod model;
pub mod nn;
pub mod train;

pub use scalar::Scalar;

/// `f32` tensors: the training configuration.
pub type Tensor32 = nn::Tensor<f32>;
/// `f64` tensors: the verification configuration.
pub type Tensor64 = nn::Tensor<f64>;
