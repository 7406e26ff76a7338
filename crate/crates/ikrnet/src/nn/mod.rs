//! Reverse-mode differentiation kernel: exactly the tensor operations the
//! classifier needs, an AdamW optimizer, and BCE loss.

pub mod checkpoint;
mod conv;
pub mod init;
mod loss;
mod norm;
mod ops;
mod optim;
mod rnn;
mod se;
mod tensor;

pub use conv::{conv1d, conv1d_out_len};
pub use loss::{bce_loss, BCE_EPS};
pub use norm::{batchnorm1d, BatchNorm1d, BATCHNORM_EPS, BATCHNORM_MOMENTUM};
pub use ops::{adaptive_avg_pool1d, concat_axis1, global_avg_pool, linear, matmul, scale_channels};
pub use optim::{clip_grad_norm, AdamW, AdamWConfig};
pub use rnn::{bilstm, lstm_cell, BiLstmLayer, LstmWeights};
pub use se::{squeeze_excite, SqueezeExcite};
pub use tensor::{is_grad_enabled, no_grad, Tensor, TopoOrder};
