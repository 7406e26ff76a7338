//! Binary cross-entropy over probability scores.

use crate::error::NnError;
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

/// Clamp applied to scores before taking logs.
pub const BCE_EPS: f64 = 1e-7;

/// Mean of `-[y ln p + (1 - y) ln(1 - p)]` over the batch.
///
/// Scores are clamped to `[eps, 1 - eps]`; the gradient is zero where the
/// clamp is active. Labels are treated as constants.
pub fn bce_loss<S: Scalar>(scores: &Tensor<S>, labels: &Tensor<S>) -> Result<Tensor<S>, NnError> {
    if scores.shape() != labels.shape() {
        return Err(NnError::shape(
            "bce_loss",
            format!("{:?}", scores.shape()),
            format!("{:?}", labels.shape()),
        ));
    }
    let n = scores.len();
    if n == 0 {
        return Err(NnError::invalid("bce_loss", "empty batch"));
    }
    let eps = S::from_f64(BCE_EPS);
    let lo = eps;
    let hi = S::one() - eps;
    let y = labels.data();
    let (loss, clamped) = scores.with_data(|p| {
        let mut acc = S::zero();
        let mut clamped = vec![S::zero(); n];
        for i in 0..n {
            let pc = p[i].max(lo).min(hi);
            clamped[i] = pc;
            acc += -(y[i] * pc.ln() + (S::one() - y[i]) * (S::one() - pc).ln());
        }
        (acc * S::from_f64(1.0 / n as f64), clamped)
    });

    let p = scores.clone();
    Ok(Tensor::from_op(vec![1], vec![loss], vec![scores.clone(), labels.clone()], move |dy| {
        if !p.requires_grad() {
            return;
        }
        let raw = p.data();
        let inv_n = S::from_f64(1.0 / n as f64);
        p.with_grad_mut(|g| {
            for i in 0..n {
                // Zero gradient where the clamp was active.
                if raw[i] < lo || raw[i] > hi {
                    continue;
                }
                let pc = clamped[i];
                g[i] += dy[0] * inv_n * (pc - y[i]) / (pc * (S::one() - pc));
            }
        });
    }))
}
