//! Classification metrics, accuracy-parity robustness over protocol zones
//! and sampling rates, per-patient accuracy curves, and Youden-index
//! heart-rate thresholds.

mod metrics;
mod report;
mod roc;

pub use metrics::{
    accuracy_parity_difference, basic_metrics, per_patient_threshold_curve, report_apd,
    ApdGrouping, ApdSummary, BasicMetrics, ThresholdCurve,
};
pub use report::{build_report, write_report_csv, EvalReport, OhrAnalysis, ZoneAccuracy};
pub use roc::{error_rates_by_ohr, roc_curve, youden_ohr, OhrResult, RocPoint};

use serde::{Deserialize, Serialize};

use crate::signal::{Label, ProtocolZone};

/// One scored record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionEntry {
    pub record_id: String,
    pub patient_id: String,
    pub zone: ProtocolZone,
    /// Provenance rate the record passed through.
    pub source_fs: f64,
    pub true_label: Label,
    pub predicted_label: Label,
    pub score: f64,
    /// Estimated average heart rate over the record, when at least two beats
    /// were found.
    pub average_bpm: Option<f64>,
}

impl PredictionEntry {
    pub fn correct(&self) -> bool {
        self.true_label == self.predicted_label
    }
}

/// A set of scored records with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub entries: Vec<PredictionEntry>,
}

impl PredictionSet {
    pub fn new(entries: Vec<PredictionEntry>) -> Self {
        debug_assert!(
            {
                let mut ids: Vec<&String> = entries.iter().map(|e| &e.record_id).collect();
                ids.sort();
                ids.windows(2).all(|w| w[0] != w[1])
            },
            "prediction record ids must be unique"
        );
        PredictionSet { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn accuracy(&self) -> f64 {
        let correct = self.entries.iter().filter(|e| e.correct()).count();
        correct as f64 / self.entries.len() as f64
    }
}
