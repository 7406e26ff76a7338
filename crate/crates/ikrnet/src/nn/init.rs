//! Seeded weight initialization. All draws happen in `f64` and convert, so
//! f32 and f64 models built from the same seed share the same stream.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::nn::rnn::LstmWeights;
use crate::nn::se::SqueezeExcite;
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

fn uniform<S: Scalar>(shape: Vec<usize>, bound: f64, rng: &mut ChaCha12Rng) -> Tensor<S> {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| S::from_f64(rng.random_range(-bound..bound))).collect();
    Tensor::from_vec(shape, data, true)
}

/// Kaiming-uniform (fan-in, ReLU gain): `U(-sqrt(6/fan_in), sqrt(6/fan_in))`.
pub fn kaiming_uniform<S: Scalar>(shape: Vec<usize>, fan_in: usize, rng: &mut ChaCha12Rng) -> Tensor<S> {
    let bound = (6.0 / fan_in.max(1) as f64).sqrt();
    uniform(shape, bound, rng)
}

/// Zero-initialized trainable bias.
pub fn zeros_param<S: Scalar>(shape: Vec<usize>) -> Tensor<S> {
    let n: usize = shape.iter().product();
    Tensor::from_vec(shape, vec![S::zero(); n], true)
}

/// Conv kernel `[C_out, C_in/groups, k]` with matching fan-in.
pub fn conv_weight<S: Scalar>(
    c_out: usize,
    c_in_per_group: usize,
    k: usize,
    rng: &mut ChaCha12Rng,
) -> Tensor<S> {
    kaiming_uniform(vec![c_out, c_in_per_group, k], c_in_per_group * k, rng)
}

/// FC weight `[O, I]` with fan-in `I`.
pub fn linear_weight<S: Scalar>(out: usize, input: usize, rng: &mut ChaCha12Rng) -> Tensor<S> {
    kaiming_uniform(vec![out, input], input, rng)
}

/// LSTM weights: uniform `+-1/sqrt(H)`, forget-gate bias set to 1.
pub fn lstm_weights<S: Scalar>(input: usize, hidden: usize, rng: &mut ChaCha12Rng) -> LstmWeights<S> {
    let bound = 1.0 / (hidden as f64).sqrt();
    let w_ih = uniform(vec![4 * hidden, input], bound, rng);
    let w_hh = uniform(vec![4 * hidden, hidden], bound, rng);
    let mut b = vec![S::zero(); 4 * hidden];
    for v in b.iter_mut().skip(hidden).take(hidden) {
        *v = S::one();
    }
    LstmWeights {
        w_ih,
        w_hh,
        b_ih: Tensor::from_vec(vec![4 * hidden], b, true),
        b_hh: zeros_param(vec![4 * hidden]),
    }
}

/// Squeeze-excite bottleneck pair for `channels` with the given reduction.
pub fn squeeze_excite<S: Scalar>(
    channels: usize,
    reduction: usize,
    rng: &mut ChaCha12Rng,
) -> SqueezeExcite<S> {
    let reduced = (channels / reduction.max(1)).max(1);
    SqueezeExcite {
        w_reduce: linear_weight(reduced, channels, rng),
        b_reduce: zeros_param(vec![reduced]),
        w_expand: linear_weight(channels, reduced, rng),
        b_expand: zeros_param(vec![channels]),
    }
}
