//! AdamW with decoupled weight decay, plus global-norm gradient clipping.

use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

/// Hyperparameters of the optimizer; stored as `f64` so they are independent
/// of the model's scalar type.
#[derive(Debug, Clone, Copy)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.01 }
    }
}

struct Moments<S> {
    m: Vec<S>,
    v: Vec<S>,
}

/// Optimizer state: per-parameter first/second moments and the step count.
pub struct AdamW<S: Scalar> {
    pub config: AdamWConfig,
    state: Vec<Moments<S>>,
    step: u64,
}

impl<S: Scalar> AdamW<S> {
    /// Initializes zeroed moment buffers shaped like `params`.
    pub fn new(config: AdamWConfig, params: &[Tensor<S>]) -> Self {
        let state = params
            .iter()
            .map(|p| Moments { m: vec![S::zero(); p.len()], v: vec![S::zero(); p.len()] })
            .collect();
        AdamW { config, state, step: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One decoupled update over all parameters:
    /// `theta -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta)`.
    ///
    /// Parameters without an accumulated gradient are treated as having a
    /// zero gradient (weight decay still applies).
    pub fn step(&mut self, params: &[Tensor<S>]) {
        assert_eq!(params.len(), self.state.len(), "optimizer built for a different parameter set");
        self.step += 1;
        let t = self.step as f64;
        let c = self.config;
        let beta1 = S::from_f64(c.beta1);
        let beta2 = S::from_f64(c.beta2);
        let one_m_b1 = S::one() - beta1;
        let one_m_b2 = S::one() - beta2;
        let corr1 = S::from_f64(1.0 / (1.0 - c.beta1.powf(t)));
        let corr2 = S::from_f64(1.0 / (1.0 - c.beta2.powf(t)));
        let lr = S::from_f64(c.lr);
        let eps = S::from_f64(c.eps);
        let wd = S::from_f64(c.weight_decay);

        for (param, mom) in params.iter().zip(self.state.iter_mut()) {
            let grad = param.grad();
            param.with_data_mut(|theta| {
                for i in 0..theta.len() {
                    let g = grad.as_ref().map(|g| g[i]).unwrap_or(S::zero());
                    mom.m[i] = beta1 * mom.m[i] + one_m_b1 * g;
                    mom.v[i] = beta2 * mom.v[i] + one_m_b2 * g * g;
                    let m_hat = mom.m[i] * corr1;
                    let v_hat = mom.v[i] * corr2;
                    theta[i] -= lr * (m_hat / (v_hat.sqrt() + eps) + wd * theta[i]);
                }
            });
        }
    }
}

/// Scales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the pre-clip norm.
pub fn clip_grad_norm<S: Scalar>(params: &[Tensor<S>], max_norm: f64) -> f64 {
    let mut sq = 0.0;
    for p in params {
        if let Some(g) = p.grad() {
            for v in g {
                let f = v.as_f64();
                sq += f * f;
            }
        }
    }
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = S::from_f64(max_norm / norm);
        for p in params {
            p.with_grad_mut(|g| {
                for v in g.iter_mut() {
                    *v *= scale;
                }
            });
        }
    }
    norm
}
