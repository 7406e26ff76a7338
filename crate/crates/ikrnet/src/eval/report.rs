//! Full evaluation report assembly and CSV export.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DataError, EvalError};
use crate::eval::metrics::{
    self, accuracy_parity_difference, basic_metrics, per_patient_threshold_curve, report_apd,
    ApdGrouping, ApdSummary, BasicMetrics, ThresholdCurve,
};
use crate::eval::roc::{auc, error_rates_by_ohr, roc_curve, youden_ohr, OhrResult};
use crate::eval::PredictionSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneAccuracy {
    pub n: usize,
    pub accuracy: f64,
}

/// Heart-rate threshold analysis: per-patient and pooled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OhrAnalysis {
    pub per_patient: BTreeMap<String, OhrResult>,
    pub pooled: Option<OhrResult>,
    pub pooled_auc: Option<f64>,
    /// Pooled misclassification rate above / at-or-below each patient's OHR.
    pub error_rate_above: f64,
    pub error_rate_below: f64,
    /// Patients skipped because their records are single-class (all correct
    /// or all wrong) or lack heart-rate estimates.
    pub excluded_patients: Vec<String>,
    /// Records without a usable heart-rate estimate.
    pub records_without_hr: usize,
}

/// Everything the evaluation produces, serialized as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub overall: BasicMetrics,
    pub n_records: usize,
    pub per_zone: BTreeMap<String, ZoneAccuracy>,
    pub per_rate: BTreeMap<String, ZoneAccuracy>,
    /// max - min of zone accuracies, pooled over all rates.
    pub apd_zones: Option<f64>,
    /// max - min of per-rate accuracies.
    pub apd_rates: Option<f64>,
    /// Per-rate zone-wise APD, mean and std across rates.
    pub apd_summary: Option<ApdSummary>,
    pub per_patient_accuracy: BTreeMap<String, ZoneAccuracy>,
    pub threshold_curve: ThresholdCurve,
    pub ohr: OhrAnalysis,
}

/// Assembles the report from a prediction set. Sections whose preconditions
/// fail (single zone, single rate, one-class ROC input) come back absent
/// rather than failing the run.
pub fn build_report(preds: &PredictionSet) -> Result<EvalReport, EvalError> {
    if preds.is_empty() {
        return Err(EvalError::InvalidArgument("empty prediction set".into()));
    }
    let overall = basic_metrics(preds)?;

    let zone_table = metrics::zone_table(preds);
    let rate_table = metrics::group_accuracies(preds, ApdGrouping::SamplingRate);
    let per_zone = zone_table
        .into_iter()
        .map(|(k, (n, accuracy))| (k, ZoneAccuracy { n, accuracy }))
        .collect();
    let per_rate = rate_table
        .into_iter()
        .map(|(k, (n, accuracy))| (k, ZoneAccuracy { n, accuracy }))
        .collect();

    let apd_zones = accuracy_parity_difference(preds, ApdGrouping::Zone).ok();
    let apd_rates = accuracy_parity_difference(preds, ApdGrouping::SamplingRate).ok();
    let apd_summary = report_apd(preds).ok();

    let mut per_patient: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for e in &preds.entries {
        let c = per_patient.entry(e.patient_id.clone()).or_default();
        c.0 += 1;
        c.1 += usize::from(e.correct());
    }
    let per_patient_accuracy = per_patient
        .into_iter()
        .map(|(p, (n, correct))| (p, ZoneAccuracy { n, accuracy: correct as f64 / n as f64 }))
        .collect();

    let threshold_curve = per_patient_threshold_curve(preds, &metrics::default_threshold_grid());

    Ok(EvalReport {
        overall,
        n_records: preds.len(),
        per_zone,
        per_rate,
        apd_zones,
        apd_rates,
        apd_summary,
        per_patient_accuracy,
        threshold_curve,
        ohr: build_ohr(preds),
    })
}

fn build_ohr(preds: &PredictionSet) -> OhrAnalysis {
    let mut per_patient = BTreeMap::new();
    let mut excluded = Vec::new();
    let mut records_without_hr = 0usize;

    let mut by_patient: BTreeMap<String, Vec<(bool, f64)>> = BTreeMap::new();
    for e in &preds.entries {
        match e.average_bpm {
            Some(hr) => by_patient.entry(e.patient_id.clone()).or_default().push((!e.correct(), hr)),
            None => records_without_hr += 1,
        }
    }

    for (patient, rows) in &by_patient {
        let miss: Vec<bool> = rows.iter().map(|(m, _)| *m).collect();
        let hr: Vec<f64> = rows.iter().map(|(_, h)| *h).collect();
        match roc_curve(&miss, &hr).and_then(|roc| youden_ohr(&roc)) {
            Ok(res) => {
                per_patient.insert(patient.clone(), res);
            }
            Err(_) => excluded.push(patient.clone()),
        }
    }

    let pooled_rows: Vec<(bool, f64)> = by_patient.values().flatten().copied().collect();
    let miss: Vec<bool> = pooled_rows.iter().map(|(m, _)| *m).collect();
    let hr: Vec<f64> = pooled_rows.iter().map(|(_, h)| *h).collect();
    let pooled_roc = roc_curve(&miss, &hr).ok();
    let pooled_auc = pooled_roc.as_ref().map(|r| auc(r));
    let pooled = pooled_roc.and_then(|r| youden_ohr(&r).ok());

    let split_rows: Vec<(bool, f64, f64)> = by_patient
        .iter()
        .filter_map(|(p, rows)| per_patient.get(p).map(|ohr| (rows, ohr.threshold_bpm)))
        .flat_map(|(rows, t)| rows.iter().map(move |&(m, h)| (m, h, t)))
        .collect();
    let (error_rate_above, error_rate_below) = error_rates_by_ohr(&split_rows);

    OhrAnalysis {
        per_patient,
        pooled,
        pooled_auc,
        error_rate_above,
        error_rate_below,
        excluded_patients: excluded,
        records_without_hr,
    }
}

/// Writes the CSV companions of a report with fixed column orders:
/// `per_zone.csv` (zone,n,accuracy), `per_rate.csv` (rate_hz,n,accuracy),
/// and `threshold_curve.csv` (zone,threshold,patients_above).
pub fn write_report_csv(report: &EvalReport, dir: &Path) -> Result<(), DataError> {
    let mut zone_csv = String::from("zone,n,accuracy\n");
    for (zone, acc) in &report.per_zone {
        zone_csv.push_str(&format!("{zone},{},{}\n", acc.n, acc.accuracy));
    }
    let path = dir.join("per_zone.csv");
    fs::write(&path, zone_csv).map_err(|e| DataError::io(path.display().to_string(), e))?;

    let mut rate_csv = String::from("rate_hz,n,accuracy\n");
    for (rate, acc) in &report.per_rate {
        rate_csv.push_str(&format!("{rate},{},{}\n", acc.n, acc.accuracy));
    }
    let path = dir.join("per_rate.csv");
    fs::write(&path, rate_csv).map_err(|e| DataError::io(path.display().to_string(), e))?;

    let mut curve_csv = String::from("zone,threshold,patients_above\n");
    for (zone, counts) in &report.threshold_curve.counts {
        for (t, n) in report.threshold_curve.thresholds.iter().zip(counts) {
            curve_csv.push_str(&format!("{zone},{t},{n}\n"));
        }
    }
    let path = dir.join("threshold_curve.csv");
    fs::write(&path, curve_csv).map_err(|e| DataError::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::PredictionEntry;
    use crate::signal::{Label, ProtocolZone};

    fn entry(id: usize, patient: &str, zone: ProtocolZone, rate: f64, correct: bool, hr: f64) -> PredictionEntry {
        let truth = Label::SotPlus;
        PredictionEntry {
            record_id: format!("r{id}"),
            patient_id: patient.into(),
            zone,
            source_fs: rate,
            true_label: truth,
            predicted_label: if correct { truth } else { Label::SotMinus },
            score: if correct { 0.9 } else { 0.1 },
            average_bpm: Some(hr),
        }
    }

    #[test]
    fn report_sections_are_internally_consistent() {
        let mut entries = Vec::new();
        let mut id = 0;
        for patient in ["p0", "p1"] {
            for zone in [ProtocolZone::Baseline, ProtocolZone::StMinusDgPlus] {
                for rate in [250.0, 500.0] {
                    for k in 0..5 {
                        let correct = !(patient == "p1" && k == 0);
                        let hr = if correct { 65.0 + k as f64 } else { 95.0 + (id % 3) as f64 };
                        entries.push(entry(id, patient, zone, rate, correct, hr));
                        id += 1;
                    }
                }
            }
        }
        let preds = PredictionSet::new(entries);
        let report = build_report(&preds).unwrap();

        let zone_total: usize = report.per_zone.values().map(|z| z.n).sum();
        assert_eq!(zone_total, report.n_records);
        let rate_total: usize = report.per_rate.values().map(|z| z.n).sum();
        assert_eq!(rate_total, report.n_records);
        let patient_total: usize = report.per_patient_accuracy.values().map(|z| z.n).sum();
        assert_eq!(patient_total, report.n_records);

        // p0 is all-correct: excluded from per-patient OHR.
        assert!(report.ohr.per_patient.contains_key("p1"));
        assert_eq!(report.ohr.excluded_patients, vec!["p0".to_string()]);
        // p1's errors sit at high HR, so the error rate above OHR dominates.
        assert!(report.ohr.error_rate_above >= report.ohr.error_rate_below);
    }

    #[test]
    fn csv_export_has_fixed_headers() {
        let preds = PredictionSet::new(vec![
            entry(0, "p0", ProtocolZone::Baseline, 500.0, true, 60.0),
            entry(1, "p0", ProtocolZone::Baseline, 500.0, false, 90.0),
        ]);
        let report = build_report(&preds).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_report_csv(&report, dir.path()).unwrap();
        let zone = std::fs::read_to_string(dir.path().join("per_zone.csv")).unwrap();
        assert!(zone.starts_with("zone,n,accuracy\n"));
        let rate = std::fs::read_to_string(dir.path().join("per_rate.csv")).unwrap();
        assert!(rate.starts_with("rate_hz,n,accuracy\n"));
        let curve = std::fs::read_to_string(dir.path().join("threshold_curve.csv")).unwrap();
        assert!(curve.starts_with("zone,threshold,patients_above\n"));
    }
}
