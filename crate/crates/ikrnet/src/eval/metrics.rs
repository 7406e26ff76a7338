//! Accuracy metrics and the accuracy-parity robustness measure.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::eval::{PredictionEntry, PredictionSet};
use crate::signal::{Label, ProtocolZone};

/// Standard suite with the positive class Sot+. Precision, recall, and F1
/// are absent (not zero) when their denominators vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasicMetrics {
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

pub fn basic_metrics(preds: &PredictionSet) -> Result<BasicMetrics, EvalError> {
    if preds.is_empty() {
        return Err(EvalError::InvalidArgument("empty prediction set".into()));
    }
    let (mut tp, mut fp, mut tn, mut fne) = (0usize, 0usize, 0usize, 0usize);
    for e in &preds.entries {
        match (e.predicted_label, e.true_label) {
            (Label::SotPlus, Label::SotPlus) => tp += 1,
            (Label::SotPlus, Label::SotMinus) => fp += 1,
            (Label::SotMinus, Label::SotMinus) => tn += 1,
            (Label::SotMinus, Label::SotPlus) => fne += 1,
        }
    }
    let accuracy = (tp + tn) as f64 / preds.len() as f64;
    let precision = (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64);
    let recall = (tp + fne > 0).then(|| tp as f64 / (tp + fne) as f64);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    Ok(BasicMetrics { accuracy, precision, recall, f1 })
}

/// Subgroup axis for accuracy parity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ApdGrouping {
    /// The three protocol zones (unassigned records are not a subgroup).
    Zone,
    /// Observed provenance sampling rates.
    SamplingRate,
}

fn group_key(e: &PredictionEntry, grouping: ApdGrouping) -> Option<String> {
    match grouping {
        ApdGrouping::Zone => match e.zone {
            ProtocolZone::Unassigned => None,
            z => Some(z.to_string()),
        },
        ApdGrouping::SamplingRate => Some(format!("{}", e.source_fs)),
    }
}

/// Per-group accuracies under a grouping.
pub fn group_accuracies(
    preds: &PredictionSet,
    grouping: ApdGrouping,
) -> BTreeMap<String, (usize, f64)> {
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for e in &preds.entries {
        if let Some(key) = group_key(e, grouping) {
            let c = counts.entry(key).or_default();
            c.0 += 1;
            c.1 += usize::from(e.correct());
        }
    }
    counts
        .into_iter()
        .map(|(k, (n, correct))| (k, (n, correct as f64 / n as f64)))
        .collect()
}

/// Accuracy table over every zone including the unassigned bucket, so row
/// counts sum to the record total. The unassigned bucket is a reporting
/// row only; it is never an accuracy-parity subgroup.
pub fn zone_table(preds: &PredictionSet) -> BTreeMap<String, (usize, f64)> {
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for e in &preds.entries {
        let c = counts.entry(e.zone.to_string()).or_default();
        c.0 += 1;
        c.1 += usize::from(e.correct());
    }
    counts
        .into_iter()
        .map(|(k, (n, correct))| (k, (n, correct as f64 / n as f64)))
        .collect()
}

/// `|acc_max - acc_min|` over the non-empty subgroups.
pub fn accuracy_parity_difference(
    preds: &PredictionSet,
    grouping: ApdGrouping,
) -> Result<f64, EvalError> {
    let groups = group_accuracies(preds, grouping);
    if groups.len() < 2 {
        return Err(EvalError::InvalidArgument(format!(
            "accuracy parity needs at least 2 non-empty groups, got {}",
            groups.len()
        )));
    }
    let accs: Vec<f64> = groups.values().map(|(_, a)| *a).collect();
    let max = accs.iter().cloned().fold(f64::MIN, f64::max);
    let min = accs.iter().cloned().fold(f64::MAX, f64::min);
    Ok((max - min).abs())
}

/// Zone-wise APD per sampling rate, summarized as mean and population
/// standard deviation across rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApdSummary {
    pub mean: f64,
    pub std: f64,
    /// Zone-wise APD per rate, in ascending rate order.
    pub per_rate: Vec<(f64, f64)>,
    /// Rates skipped because some zone had no records there.
    pub skipped_rates: Vec<f64>,
}

pub fn report_apd(preds: &PredictionSet) -> Result<ApdSummary, EvalError> {
    let mut rates: Vec<f64> = preds.entries.iter().map(|e| e.source_fs).collect();
    rates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    rates.dedup();
    if rates.len() < 2 {
        return Err(EvalError::InvalidArgument(format!(
            "rate-wise APD summary needs >= 2 rates, got {}",
            rates.len()
        )));
    }
    let n_zones = group_accuracies(preds, ApdGrouping::Zone).len();
    if n_zones < 2 {
        return Err(EvalError::InvalidArgument(format!(
            "rate-wise APD summary needs >= 2 zones, got {n_zones}"
        )));
    }

    let mut per_rate = Vec::new();
    let mut skipped = Vec::new();
    for &rate in &rates {
        let subset = PredictionSet::new(
            preds.entries.iter().filter(|e| e.source_fs == rate).cloned().collect(),
        );
        let groups = group_accuracies(&subset, ApdGrouping::Zone);
        if groups.len() < n_zones {
            skipped.push(rate);
            continue;
        }
        per_rate.push((rate, accuracy_parity_difference(&subset, ApdGrouping::Zone)?));
    }
    if per_rate.is_empty() {
        return Err(EvalError::InvalidArgument("every rate is missing a zone".into()));
    }
    let mean = per_rate.iter().map(|(_, a)| a).sum::<f64>() / per_rate.len() as f64;
    let var = per_rate.iter().map(|(_, a)| (a - mean) * (a - mean)).sum::<f64>() / per_rate.len() as f64;
    Ok(ApdSummary { mean, std: var.sqrt(), per_rate, skipped_rates: skipped })
}

/// Patient counts above an accuracy threshold, per zone and overall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCurve {
    pub thresholds: Vec<f64>,
    /// zone name -> counts aligned with `thresholds`.
    pub counts: BTreeMap<String, Vec<usize>>,
}

/// Default grid for the patient-count curves: 0.50 to 1.00 step 0.01.
pub fn default_threshold_grid() -> Vec<f64> {
    (0..=50).map(|i| 0.5 + i as f64 * 0.01).collect()
}

/// For each threshold and zone, the number of patients whose accuracy on
/// that zone's records is strictly above the threshold. The "All" series
/// uses every record of the patient.
pub fn per_patient_threshold_curve(preds: &PredictionSet, thresholds: &[f64]) -> ThresholdCurve {
    let mut per_patient_zone: BTreeMap<(String, String), (usize, usize)> = BTreeMap::new();
    for e in &preds.entries {
        let mut keys = vec![("All".to_string(), e.patient_id.clone())];
        if e.zone != ProtocolZone::Unassigned {
            keys.push((e.zone.to_string(), e.patient_id.clone()));
        }
        for (zone, patient) in keys {
            let c = per_patient_zone.entry((zone, patient)).or_default();
            c.0 += 1;
            c.1 += usize::from(e.correct());
        }
    }

    let mut accs_by_zone: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for ((zone, _), (n, correct)) in per_patient_zone {
        accs_by_zone.entry(zone).or_default().push(correct as f64 / n as f64);
    }

    let counts = accs_by_zone
        .into_iter()
        .map(|(zone, accs)| {
            let series = thresholds
                .iter()
                .map(|t| accs.iter().filter(|a| **a > *t).count())
                .collect();
            (zone, series)
        })
        .collect();
    ThresholdCurve { thresholds: thresholds.to_vec(), counts }
}
