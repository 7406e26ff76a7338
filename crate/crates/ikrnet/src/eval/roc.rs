//! ROC analysis with heart rate as the misclassification predictor, and the
//! Youden-index optimal heart-rate threshold.

use serde::{Deserialize, Serialize};

use crate::error::EvalError;

/// One swept point; `threshold` is absent on the (0,0)/(1,1) endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: Option<f64>,
}

/// ROC of the rule "predict an error when the heart rate is at or above the
/// threshold", sweeping thresholds over the observed values in descending
/// order. Requires both error and non-error entries.
pub fn roc_curve(misclassified: &[bool], predictor: &[f64]) -> Result<Vec<RocPoint>, EvalError> {
    if misclassified.len() != predictor.len() {
        return Err(EvalError::InvalidArgument(format!(
            "misclassified ({}) and predictor ({}) lengths differ",
            misclassified.len(),
            predictor.len()
        )));
    }
    let positives = misclassified.iter().filter(|m| **m).count();
    let negatives = misclassified.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::UndefinedRoc(format!(
            "needs both classes, got {positives} errors and {negatives} non-errors"
        )));
    }

    let mut thresholds: Vec<f64> = predictor.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();

    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0, threshold: None }];
    for &t in &thresholds {
        let (mut tp, mut fp) = (0usize, 0usize);
        for (m, &hr) in misclassified.iter().zip(predictor) {
            if hr >= t {
                if *m {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
        }
        points.push(RocPoint {
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
            threshold: Some(t),
        });
    }
    points.push(RocPoint { fpr: 1.0, tpr: 1.0, threshold: None });
    Ok(points)
}

/// Trapezoidal area under the curve.
pub fn auc(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

/// The Youden-optimal threshold, with its index value and an
/// informativeness flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhrResult {
    pub threshold_bpm: f64,
    pub youden_index: f64,
    /// False when the best index stays below 0.1: the predictor carries
    /// little signal and the threshold should not be over-read.
    pub informative: bool,
}

/// Threshold maximizing `tpr - fpr`; ties break toward the lower threshold.
pub fn youden_ohr(roc: &[RocPoint]) -> Result<OhrResult, EvalError> {
    let mut best: Option<(f64, f64)> = None;
    for p in roc {
        if let Some(t) = p.threshold {
            let j = p.tpr - p.fpr;
            let better = match best {
                None => true,
                // The sweep is descending, so >= moves ties to lower thresholds.
                Some((best_j, _)) => j >= best_j,
            };
            if better {
                best = Some((j, t));
            }
        }
    }
    let (youden_index, threshold_bpm) =
        best.ok_or_else(|| EvalError::InvalidArgument("ROC has no threshold points".into()))?;
    Ok(OhrResult { threshold_bpm, youden_index, informative: youden_index >= 0.1 })
}

/// Pooled misclassification rates for records above vs at-or-below each
/// patient's optimal threshold. Entries: `(misclassified, hr, ohr)`.
pub fn error_rates_by_ohr(entries: &[(bool, f64, f64)]) -> (f64, f64) {
    let (mut above_n, mut above_err, mut below_n, mut below_err) = (0usize, 0usize, 0usize, 0usize);
    for &(miss, hr, ohr) in entries {
        if hr > ohr {
            above_n += 1;
            above_err += usize::from(miss);
        } else {
            below_n += 1;
            below_err += usize::from(miss);
        }
    }
    let rate = |err: usize, n: usize| if n == 0 { 0.0 } else { err as f64 / n as f64 };
    (rate(above_err, above_n), rate(below_err, below_n))
}
