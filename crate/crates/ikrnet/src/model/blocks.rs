//! Convolutional building blocks of a resolution branch.

use rand_chacha::ChaCha12Rng;

use crate::error::NnError;
use crate::nn::checkpoint::NamedTensor;
use crate::nn::{conv1d, init, squeeze_excite, BatchNorm1d, SqueezeExcite, Tensor};
use crate::scalar::Scalar;

/// Convolution with optional batchnorm and ReLU.
pub struct ConvUnit<S: Scalar> {
    pub weight: Tensor<S>,
    pub bias: Option<Tensor<S>>,
    pub bn: Option<BatchNorm1d<S>>,
    pub stride: usize,
    pub padding: usize,
    pub groups: usize,
    pub relu: bool,
}

impl<S: Scalar> ConvUnit<S> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        c_in: usize,
        c_out: usize,
        k: usize,
        stride: usize,
        groups: usize,
        batchnorm: bool,
        relu: bool,
        rng: &mut ChaCha12Rng,
    ) -> Self {
        let weight = init::conv_weight(c_out, c_in / groups, k, rng);
        // Convs followed by batchnorm omit the bias; the shift is beta's job.
        let bias = (!batchnorm).then(|| init::zeros_param(vec![c_out]));
        let bn = batchnorm.then(|| BatchNorm1d::new(c_out));
        ConvUnit { weight, bias, bn, stride, padding: k / 2, groups, relu }
    }

    pub fn forward(&self, x: &Tensor<S>, training: bool) -> Result<Tensor<S>, NnError> {
        let mut y = conv1d(x, &self.weight, self.bias.as_ref(), self.stride, self.padding, self.groups)?;
        if let Some(bn) = &self.bn {
            y = bn.forward(&y, training)?;
        }
        Ok(if self.relu { y.relu() } else { y })
    }

    pub fn collect(&self, prefix: &str, out: &mut Vec<NamedTensor<S>>) {
        out.push(NamedTensor {
            name: format!("{prefix}.weight"),
            tensor: self.weight.clone(),
            trainable: true,
        });
        if let Some(bias) = &self.bias {
            out.push(NamedTensor { name: format!("{prefix}.bias"), tensor: bias.clone(), trainable: true });
        }
        if let Some(bn) = &self.bn {
            out.push(NamedTensor { name: format!("{prefix}.bn.gamma"), tensor: bn.gamma.clone(), trainable: true });
            out.push(NamedTensor { name: format!("{prefix}.bn.beta"), tensor: bn.beta.clone(), trainable: true });
            out.push(NamedTensor {
                name: format!("{prefix}.bn.running_mean"),
                tensor: bn.running_mean.clone(),
                trainable: false,
            });
            out.push(NamedTensor {
                name: format!("{prefix}.bn.running_var"),
                tensor: bn.running_var.clone(),
                trainable: false,
            });
        }
    }
}

/// Inverted residual bottleneck: pointwise expand, depthwise conv (carrying
/// the stride), squeeze-excite recalibration, linear pointwise projection.
/// The identity shortcut applies when stride is 1 and widths match.
pub struct InvertedBlock<S: Scalar> {
    pub expand: ConvUnit<S>,
    pub depthwise: ConvUnit<S>,
    pub se: SqueezeExcite<S>,
    pub project: ConvUnit<S>,
    pub use_residual: bool,
}

impl<S: Scalar> InvertedBlock<S> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        c_in: usize,
        c_out: usize,
        k: usize,
        stride: usize,
        expansion: usize,
        se_reduction: usize,
        batchnorm: bool,
        rng: &mut ChaCha12Rng,
    ) -> Self {
        let hidden = c_in * expansion;
        InvertedBlock {
            expand: ConvUnit::new(c_in, hidden, 1, 1, 1, batchnorm, true, rng),
            depthwise: ConvUnit::new(hidden, hidden, k, stride, hidden, batchnorm, true, rng),
            se: init::squeeze_excite(hidden, se_reduction, rng),
            project: ConvUnit::new(hidden, c_out, 1, 1, 1, batchnorm, false, rng),
            use_residual: stride == 1 && c_in == c_out,
        }
    }

    pub fn forward(&self, x: &Tensor<S>, training: bool) -> Result<Tensor<S>, NnError> {
        let mut y = self.expand.forward(x, training)?;
        y = self.depthwise.forward(&y, training)?;
        y = squeeze_excite(&y, &self.se)?;
        y = self.project.forward(&y, training)?;
        if self.use_residual {
            y = y.add(x)?;
        }
        Ok(y)
    }

    pub fn collect(&self, prefix: &str, out: &mut Vec<NamedTensor<S>>) {
        self.expand.collect(&format!("{prefix}.expand"), out);
        self.depthwise.collect(&format!("{prefix}.depthwise"), out);
        for (name, t) in [
            ("se.reduce.weight", &self.se.w_reduce),
            ("se.reduce.bias", &self.se.b_reduce),
            ("se.expand.weight", &self.se.w_expand),
            ("se.expand.bias", &self.se.b_expand),
        ] {
            out.push(NamedTensor { name: format!("{prefix}.{name}"), tensor: t.clone(), trainable: true });
        }
        self.project.collect(&format!("{prefix}.project"), out);
    }
}

/// Plain two-conv residual block.
pub struct BasicBlock<S: Scalar> {
    pub conv1: ConvUnit<S>,
    pub conv2: ConvUnit<S>,
    pub use_residual: bool,
}

impl<S: Scalar> BasicBlock<S> {
    pub fn new(
        c_in: usize,
        c_out: usize,
        k: usize,
        stride: usize,
        batchnorm: bool,
        rng: &mut ChaCha12Rng,
    ) -> Self {
        BasicBlock {
            conv1: ConvUnit::new(c_in, c_out, k, stride, 1, batchnorm, true, rng),
            conv2: ConvUnit::new(c_out, c_out, k, 1, 1, batchnorm, false, rng),
            use_residual: stride == 1 && c_in == c_out,
        }
    }

    pub fn forward(&self, x: &Tensor<S>, training: bool) -> Result<Tensor<S>, NnError> {
        let mut y = self.conv1.forward(x, training)?;
        y = self.conv2.forward(&y, training)?;
        if self.use_residual {
            y = y.add(x)?;
        }
        Ok(y.relu())
    }

    pub fn collect(&self, prefix: &str, out: &mut Vec<NamedTensor<S>>) {
        self.conv1.collect(&format!("{prefix}.conv1"), out);
        self.conv2.collect(&format!("{prefix}.conv2"), out);
    }
}

pub enum Block<S: Scalar> {
    Inverted(InvertedBlock<S>),
    Basic(BasicBlock<S>),
}

impl<S: Scalar> Block<S> {
    pub fn forward(&self, x: &Tensor<S>, training: bool) -> Result<Tensor<S>, NnError> {
        match self {
            Block::Inverted(b) => b.forward(x, training),
            Block::Basic(b) => b.forward(x, training),
        }
    }

    pub fn collect(&self, prefix: &str, out: &mut Vec<NamedTensor<S>>) {
        match self {
            Block::Inverted(b) => b.collect(prefix, out),
            Block::Basic(b) => b.collect(prefix, out),
        }
    }
}
