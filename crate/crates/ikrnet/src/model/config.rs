//! Architecture hyperparameters and their validation.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ModelError;

/// Convolution block family used inside each branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    /// Expand -> depthwise -> squeeze-excite -> project bottleneck.
    Inverted,
    /// Two plain convolutions with an identity shortcut.
    Basic,
}

/// Full architecture description. The default is the recipe configuration;
/// `toy` is the desk-scale variant used for CI-sized experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IKrNetConfig {
    /// Kernel pair `(lk, k)` per resolution branch: front kernel and block kernel.
    pub branches: Vec<(usize, usize)>,
    /// Per-block depthwise stride schedule; length must equal `n_blocks`.
    pub strides: Vec<usize>,
    pub initial_filters: usize,
    pub n_blocks: usize,
    /// Filter count is multiplied by `filter_growth_factor` after every
    /// `filter_growth_every` blocks.
    pub filter_growth_every: usize,
    pub filter_growth_factor: usize,
    /// Pooled sequence length each branch emits.
    pub branch_out_len: usize,
    /// Channel width each branch emits (a pointwise projection is added when
    /// it differs from the final block width).
    pub branch_out_channels: usize,
    pub bilstm_layers: usize,
    pub bilstm_hidden: usize,
    pub se_reduction: usize,
    pub expansion_factor: usize,
    pub use_skip_link: bool,
    pub use_batchnorm: bool,
    pub block_kind: BlockKind,
}

impl Default for IKrNetConfig {
    fn default() -> Self {
        IKrNetConfig::paper_default()
    }
}

impl IKrNetConfig {
    /// The published recipe: 4 branches with kernel pairs
    /// (125,25), (75,15), (31,7), (15,3), strides [1,5,1,5,1,4,1,4,1,3],
    /// 64 initial filters doubled every 4 of the 10 blocks, 256-wide branch
    /// output, and 2 BiLSTM layers.
    pub fn paper_default() -> Self {
        IKrNetConfig {
            branches: vec![(125, 25), (75, 15), (31, 7), (15, 3)],
            strides: vec![1, 5, 1, 5, 1, 4, 1, 4, 1, 3],
            initial_filters: 64,
            n_blocks: 10,
            filter_growth_every: 4,
            filter_growth_factor: 2,
            branch_out_len: 4,
            branch_out_channels: 256,
            bilstm_layers: 2,
            bilstm_hidden: 256,
            se_reduction: 4,
            expansion_factor: 6,
            use_skip_link: true,
            use_batchnorm: true,
            block_kind: BlockKind::Inverted,
        }
    }

    /// Desk-scale configuration: one branch, two blocks, 8 filters.
    pub fn toy() -> Self {
        IKrNetConfig {
            branches: vec![(15, 3)],
            strides: vec![5, 4],
            initial_filters: 8,
            n_blocks: 2,
            filter_growth_every: 4,
            filter_growth_factor: 2,
            branch_out_len: 4,
            branch_out_channels: 8,
            bilstm_layers: 1,
            bilstm_hidden: 8,
            se_reduction: 4,
            expansion_factor: 4,
            use_skip_link: true,
            use_batchnorm: true,
            block_kind: BlockKind::Inverted,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.branches.is_empty() {
            return Err(ModelError::Config("at least one branch required".into()));
        }
        for &(lk, k) in &self.branches {
            if !(lk > k && k >= 1) {
                return Err(ModelError::Config(format!(
                    "kernel pair ({lk}, {k}) must satisfy lk > k >= 1"
                )));
            }
        }
        if self.strides.len() != self.n_blocks {
            return Err(ModelError::Config(format!(
                "stride schedule length {} must equal n_blocks {}",
                self.strides.len(),
                self.n_blocks
            )));
        }
        if self.strides.iter().any(|&s| s == 0) {
            return Err(ModelError::Config("strides must be >= 1".into()));
        }
        for (name, v) in [
            ("initial_filters", self.initial_filters),
            ("filter_growth_every", self.filter_growth_every),
            ("filter_growth_factor", self.filter_growth_factor),
            ("branch_out_len", self.branch_out_len),
            ("branch_out_channels", self.branch_out_channels),
            ("se_reduction", self.se_reduction),
            ("expansion_factor", self.expansion_factor),
        ] {
            if v == 0 {
                return Err(ModelError::Config(format!("{name} must be >= 1")));
            }
        }
        if self.bilstm_layers > 0 && self.bilstm_hidden == 0 {
            return Err(ModelError::Config("bilstm_hidden must be >= 1".into()));
        }
        Ok(())
    }

    /// Filter count of block `index` under the growth schedule.
    pub fn block_filters(&self, index: usize) -> usize {
        let growth_steps = index / self.filter_growth_every;
        self.initial_filters * self.filter_growth_factor.pow(growth_steps as u32)
    }

    /// Largest front kernel; the minimum admissible input length.
    pub fn min_input_len(&self) -> usize {
        self.branches.iter().map(|&(lk, _)| lk).max().unwrap_or(1)
    }

    /// SHA-256 of the canonical JSON encoding; embedded in checkpoints to
    /// reject mismatched loads.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        let mut out = String::with_capacity(64);
        for b in digest {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }
}
