//! Squeeze-and-excite channel gating.

use crate::error::NnError;
use crate::nn::ops::{global_avg_pool, linear, scale_channels};
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

/// Squeeze-and-excite weights: `[B,C,L]` is pooled over length, passed
/// through a bottleneck FC pair, and the sigmoid gates rescale the channels.
pub struct SqueezeExcite<S: Scalar> {
    /// `[C/r, C]`
    pub w_reduce: Tensor<S>,
    pub b_reduce: Tensor<S>,
    /// `[C, C/r]`
    pub w_expand: Tensor<S>,
    pub b_expand: Tensor<S>,
}

impl<S: Scalar> SqueezeExcite<S> {
    pub fn channels(&self) -> usize {
        self.w_expand.shape()[0]
    }

    pub fn forward(&self, x: &Tensor<S>) -> Result<Tensor<S>, NnError> {
        squeeze_excite(x, self)
    }
}

/// `y[b,c,l] = x[b,c,l] * sigmoid(fc2(relu(fc1(avg_l x))))[b,c]`.
pub fn squeeze_excite<S: Scalar>(x: &Tensor<S>, w: &SqueezeExcite<S>) -> Result<Tensor<S>, NnError> {
    let squeezed = global_avg_pool(x)?;
    let hidden = linear(&squeezed, &w.w_reduce, Some(&w.b_reduce))?.relu();
    let gates = linear(&hidden, &w.w_expand, Some(&w.b_expand))?.sigmoid();
    scale_channels(x, &gates)
}
