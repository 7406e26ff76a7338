//! The classifier: multi-branch CNN backbone, BiLSTM temporal stack,
//! spatial skip link, and sigmoid head.

mod blocks;
mod config;

pub use blocks::{BasicBlock, Block, ConvUnit, InvertedBlock};
pub use config::{BlockKind, IKrNetConfig};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{ModelError, NnError};
use crate::nn::checkpoint::NamedTensor;
use crate::nn::{adaptive_avg_pool1d, bilstm, concat_axis1, init, linear, BiLstmLayer, Tensor};
use crate::scalar::Scalar;

/// One resolution branch: wide front conv, block stack, adaptive pooling,
/// and an optional pointwise projection to the configured width.
pub struct Branch<S: Scalar> {
    front: ConvUnit<S>,
    blocks: Vec<Block<S>>,
    projection: Option<ConvUnit<S>>,
    out_len: usize,
}

impl<S: Scalar> Branch<S> {
    fn forward(&self, x: &Tensor<S>, training: bool) -> Result<Tensor<S>, NnError> {
        let mut y = self.front.forward(x, training)?;
        for block in &self.blocks {
            y = block.forward(&y, training)?;
        }
        y = adaptive_avg_pool1d(&y, self.out_len)?;
        if let Some(proj) = &self.projection {
            y = proj.forward(&y, training)?;
        }
        Ok(y)
    }

    fn collect(&self, prefix: &str, out: &mut Vec<NamedTensor<S>>) {
        self.front.collect(&format!("{prefix}.front"), out);
        for (j, block) in self.blocks.iter().enumerate() {
            block.collect(&format!("{prefix}.block{j}"), out);
        }
        if let Some(proj) = &self.projection {
            proj.collect(&format!("{prefix}.proj"), out);
        }
    }
}

/// Built model: branches, temporal stack, skip projection, classifier head.
pub struct IKrNet<S: Scalar> {
    config: IKrNetConfig,
    branches: Vec<Branch<S>>,
    bilstm_layers: Vec<BiLstmLayer<S>>,
    skip_weight: Option<Tensor<S>>,
    skip_bias: Option<Tensor<S>>,
    fc1_weight: Tensor<S>,
    fc1_bias: Tensor<S>,
    fc2_weight: Tensor<S>,
    fc2_bias: Tensor<S>,
}

impl<S: Scalar> IKrNet<S> {
    /// Builds the architecture with seeded initialization. The same seed and
    /// config always produce the same parameters.
    pub fn build(config: &IKrNetConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);

        let mut branches = Vec::with_capacity(config.branches.len());
        for &(lk, k) in &config.branches {
            let front = ConvUnit::new(1, config.initial_filters, lk, 1, 1, config.use_batchnorm, true, &mut rng);
            let mut blocks = Vec::with_capacity(config.n_blocks);
            let mut c_in = config.initial_filters;
            for j in 0..config.n_blocks {
                let c_out = config.block_filters(j);
                let stride = config.strides[j];
                let block = match config.block_kind {
                    BlockKind::Inverted => Block::Inverted(InvertedBlock::new(
                        c_in,
                        c_out,
                        k,
                        stride,
                        config.expansion_factor,
                        config.se_reduction,
                        config.use_batchnorm,
                        &mut rng,
                    )),
                    BlockKind::Basic => Block::Basic(BasicBlock::new(
                        c_in,
                        c_out,
                        k,
                        stride,
                        config.use_batchnorm,
                        &mut rng,
                    )),
                };
                blocks.push(block);
                c_in = c_out;
            }
            let projection = (c_in != config.branch_out_channels).then(|| {
                ConvUnit::new(c_in, config.branch_out_channels, 1, 1, 1, false, false, &mut rng)
            });
            branches.push(Branch { front, blocks, projection, out_len: config.branch_out_len });
        }

        let c_total = config.branch_out_channels * config.branches.len();
        let spatial_dim = c_total * config.branch_out_len;
        let head_width = 2 * config.bilstm_hidden.max(1);

        let mut bilstm_layers = Vec::with_capacity(config.bilstm_layers);
        let mut input_size = c_total;
        for _ in 0..config.bilstm_layers {
            bilstm_layers.push(BiLstmLayer {
                forward: init::lstm_weights(input_size, config.bilstm_hidden, &mut rng),
                backward: init::lstm_weights(input_size, config.bilstm_hidden, &mut rng),
            });
            input_size = 2 * config.bilstm_hidden;
        }

        let (skip_weight, skip_bias) = if config.use_skip_link && config.bilstm_layers > 0 {
            (
                Some(init::linear_weight(head_width, spatial_dim, &mut rng)),
                Some(init::zeros_param(vec![head_width])),
            )
        } else {
            (None, None)
        };

        let head_input = if config.bilstm_layers > 0 { head_width } else { spatial_dim };
        let fc1_weight = init::linear_weight(head_width, head_input, &mut rng);
        let fc1_bias = init::zeros_param(vec![head_width]);
        let fc2_weight = init::linear_weight(1, head_width, &mut rng);
        let fc2_bias = init::zeros_param(vec![1]);

        Ok(IKrNet {
            config: config.clone(),
            branches,
            bilstm_layers,
            skip_weight,
            skip_bias,
            fc1_weight,
            fc1_bias,
            fc2_weight,
            fc2_bias,
        })
    }

    pub fn config(&self) -> &IKrNetConfig {
        &self.config
    }

    /// Pooled per-branch features `[B, branch_out_channels, branch_out_len]`,
    /// exposed for structural tests.
    pub fn branch_features(&self, batch: &Tensor<S>, training: bool) -> Result<Vec<Tensor<S>>, ModelError> {
        self.check_input(batch)?;
        Ok(self
            .branches
            .iter()
            .map(|b| b.forward(batch, training))
            .collect::<Result<_, _>>()?)
    }

    fn check_input(&self, batch: &Tensor<S>) -> Result<(), ModelError> {
        let (_, c, l) = batch.dims3("forward").map_err(ModelError::Nn)?;
        if c != 1 {
            return Err(ModelError::Nn(NnError::shape("forward", "[B, 1, L]", format!("{:?}", batch.shape()))));
        }
        let min_len = self.config.min_input_len();
        if l < min_len {
            return Err(ModelError::Nn(NnError::invalid(
                "forward",
                format!("input length {l} below the minimum admissible length {min_len}"),
            )));
        }
        Ok(())
    }

    /// Scores in `[0, 1]`, one per batch row.
    pub fn forward(&self, batch: &Tensor<S>, training: bool) -> Result<Tensor<S>, ModelError> {
        let features = self.branch_features(batch, training)?;
        let b = batch.shape()[0];

        // [B, C_total, T] -> sequence [B, T, C_total].
        let spatial = concat_axis1(&features)?;
        let c_total = spatial.shape()[1];
        let t_len = spatial.shape()[2];
        let flat = spatial.reshape(vec![b, c_total * t_len])?;

        let consolidated = if self.bilstm_layers.is_empty() {
            flat
        } else {
            let seq = spatial.transpose_last2()?;
            let temporal = bilstm(&seq, &self.bilstm_layers)?;
            let width = temporal.shape()[2];
            let half = width / 2;
            // Each direction's final state: forward read through t = T-1,
            // backward read through t = 0.
            let fwd_last = temporal
                .narrow_axis1(t_len - 1, 1)?
                .reshape(vec![b, width])?
                .narrow_axis1(0, half)?;
            let bwd_last = temporal
                .narrow_axis1(0, 1)?
                .reshape(vec![b, width])?
                .narrow_axis1(half, half)?;
            let last = concat_axis1(&[fwd_last, bwd_last])?;
            match (&self.skip_weight, &self.skip_bias) {
                (Some(w), Some(bias)) => last.add(&linear(&flat, w, Some(bias))?)?,
                _ => last,
            }
        };

        let hidden = linear(&consolidated, &self.fc1_weight, Some(&self.fc1_bias))?.relu();
        let logits = linear(&hidden, &self.fc2_weight, Some(&self.fc2_bias))?;
        Ok(logits.sigmoid().reshape(vec![b])?)
    }

    /// Hard labels via the posterior argmax: score >= 0.5 maps to 1.
    pub fn classify(&self, batch: &Tensor<S>) -> Result<Vec<u8>, ModelError> {
        let scores = self.forward(batch, false)?;
        Ok(scores
            .data()
            .iter()
            .map(|s| if s.as_f64() >= 0.5 { 1 } else { 0 })
            .collect())
    }

    /// Named parameters and buffers in checkpoint order.
    pub fn named_slots(&self) -> Vec<NamedTensor<S>> {
        let mut out = Vec::new();
        for (i, branch) in self.branches.iter().enumerate() {
            branch.collect(&format!("branch{i}"), &mut out);
        }
        for (l, layer) in self.bilstm_layers.iter().enumerate() {
            for (dir, w) in [("fwd", &layer.forward), ("bwd", &layer.backward)] {
                for (name, t) in [
                    ("w_ih", &w.w_ih),
                    ("w_hh", &w.w_hh),
                    ("b_ih", &w.b_ih),
                    ("b_hh", &w.b_hh),
                ] {
                    out.push(NamedTensor {
                        name: format!("bilstm.layer{l}.{dir}.{name}"),
                        tensor: t.clone(),
                        trainable: true,
                    });
                }
            }
        }
        if let (Some(w), Some(bias)) = (&self.skip_weight, &self.skip_bias) {
            out.push(NamedTensor { name: "skip.weight".into(), tensor: w.clone(), trainable: true });
            out.push(NamedTensor { name: "skip.bias".into(), tensor: bias.clone(), trainable: true });
        }
        out.push(NamedTensor { name: "head.fc1.weight".into(), tensor: self.fc1_weight.clone(), trainable: true });
        out.push(NamedTensor { name: "head.fc1.bias".into(), tensor: self.fc1_bias.clone(), trainable: true });
        out.push(NamedTensor { name: "head.fc2.weight".into(), tensor: self.fc2_weight.clone(), trainable: true });
        out.push(NamedTensor { name: "head.fc2.bias".into(), tensor: self.fc2_bias.clone(), trainable: true });
        out
    }

    /// Trainable parameter tensors in checkpoint order.
    pub fn parameters(&self) -> Vec<Tensor<S>> {
        self.named_slots()
            .into_iter()
            .filter(|s| s.trainable)
            .map(|s| s.tensor)
            .collect()
    }

    /// Exact count of trainable scalar parameters.
    pub fn count_parameters(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    pub fn zero_grad(&self) {
        for p in self.parameters() {
            p.zero_grad();
        }
    }
}
