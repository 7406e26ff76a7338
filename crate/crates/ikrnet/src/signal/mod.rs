//! Single-lead ECG signals: continuous beat models, uniform sampling,
//! spline resampling, standardization, and R-peak heart-rate estimation.
//!
//! All signal arithmetic is 64-bit; amplitudes are millivolts until
//! [`standardize`] rescales them to dimensionless units.

mod beat_model;
mod heart_rate;
pub mod io;
mod resample;
pub mod spline;

pub use beat_model::{Beat, BeatWaveform, ContinuousBeatModel, GaussianWave};
pub use heart_rate::{
    detect_beat_windows, estimate_heart_rate, BeatWindowConfig, HeartRateSeries,
};
pub use resample::resample;

use serde::{Deserialize, Serialize};

use crate::error::SignalError;

/// Class label attached to a record: absence or presence of the drug footprint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "Sot-")]
    SotMinus,
    #[serde(rename = "Sot+")]
    SotPlus,
}

impl Label {
    /// 0/1 encoding used by the classifier (positive class = Sot+).
    pub fn as_target(self) -> f64 {
        match self {
            Label::SotMinus => 0.0,
            Label::SotPlus => 1.0,
        }
    }
}

/// Protocol zone a record falls into, derived from its position on the
/// clinical timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProtocolZone {
    Baseline,
    StMinusDgPlus,
    StPlusDgPlus,
    Unassigned,
}

impl std::fmt::Display for ProtocolZone {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ProtocolZone::Baseline => "Baseline",
            ProtocolZone::StMinusDgPlus => "StMinusDgPlus",
            ProtocolZone::StPlusDgPlus => "StPlusDgPlus",
            ProtocolZone::Unassigned => "Unassigned",
        };
        f.write_str(s)
    }
}

/// A uniformly sampled single-lead ECG.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    pub record_id: String,
    pub patient_id: String,
    /// Amplitude values; millivolts, or dimensionless after standardization.
    pub samples: Vec<f64>,
    /// Sampling rate in Hz.
    pub fs: f64,
    /// Rate the signal was (down)sampled to before being brought back; equals
    /// `fs` for untouched recordings. Augmentation provenance.
    pub source_fs: f64,
    pub label: Option<Label>,
    pub zone: Option<ProtocolZone>,
}

impl EcgRecord {
    pub fn new(record_id: impl Into<String>, samples: Vec<f64>, fs: f64) -> Result<Self, SignalError> {
        if samples.is_empty() {
            return Err(SignalError::InvalidArgument("record requires at least one sample".into()));
        }
        if !(fs > 0.0) {
            return Err(SignalError::InvalidArgument(format!("sampling rate must be positive, got {fs}")));
        }
        Ok(EcgRecord {
            record_id: record_id.into(),
            patient_id: String::new(),
            samples,
            fs,
            source_fs: fs,
            label: None,
            zone: None,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Record duration in seconds (`N / fs`).
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }
}

/// Uniformly samples a continuous beat model at rate `fs`.
///
/// Returns `x[n] = x(n / fs)` for `n` in `0..N` with `N = floor(t_K * fs)`.
pub fn sample(model: &ContinuousBeatModel, fs: f64) -> Result<EcgRecord, SignalError> {
    if !(fs > 0.0) {
        return Err(SignalError::InvalidArgument(format!("sampling rate must be positive, got {fs}")));
    }
    let n = (model.duration_s() * fs).floor() as usize;
    if n == 0 {
        return Err(SignalError::InvalidArgument(
            "model too short for the requested rate: no samples".into(),
        ));
    }
    let start = model.start_s();
    let samples = (0..n).map(|i| model.evaluate(start + i as f64 / fs)).collect();
    let mut rec = EcgRecord::new("sampled", samples, fs)?;
    rec.source_fs = fs;
    Ok(rec)
}

/// Whether `fs` permits perfect reconstruction of a signal band-limited to
/// `model_fmax` (the sampling theorem bound `fs >= 2 * f_max`).
pub fn check_nyquist(model_fmax: f64, fs: f64) -> bool {
    debug_assert!(model_fmax > 0.0 && fs > 0.0);
    fs >= 2.0 * model_fmax
}

/// Rescales a record to zero mean and unit population standard deviation.
///
/// Length and sampling rate are unchanged. Flat signals are rejected rather
/// than mapped to NaN.
pub fn standardize(record: &EcgRecord) -> Result<EcgRecord, SignalError> {
    let (mean, std) = population_stats(&record.samples);
    if std == 0.0 || !std.is_finite() {
        return Err(SignalError::DegenerateSignal(format!(
            "record {} has zero variance",
            record.record_id
        )));
    }
    let mut out = record.clone();
    for v in &mut out.samples {
        *v = (*v - mean) / std;
    }
    Ok(out)
}

/// Population mean and standard deviation of a sample buffer.
pub fn population_stats(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
