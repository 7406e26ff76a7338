//! Generator configuration for the synthetic drug-footprint protocol.

use serde::{Deserialize, Serialize};

use crate::error::DataError;

/// Drug footprint parameters: how hard the footprint is stamped on the
/// signal and how fast it ramps in and out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrugEffect {
    /// Added to the QT interval at full effect.
    pub qt_prolongation_ms: f64,
    /// Subtracted from the heart rate at full effect.
    pub hr_reduction_bpm: f64,
    /// Exponential onset time constant after intake.
    pub onset_tau_min: f64,
    /// Exponential decay time constant after the plateau ends.
    pub decay_tau_min: f64,
}

/// Per-patient baseline heart-rate distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HrBaseline {
    pub mean_bpm: f64,
    pub sd_bpm: f64,
}

/// A stress-test window in seconds relative to drug intake (t = 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressWindow {
    pub start_s: f64,
    pub end_s: f64,
}

/// Full description of a synthetic study: timeline, drug effect, population
/// parameters, and sampling layout. Generation is deterministic in `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProtocolSpec {
    pub n_patients: usize,
    /// Recording time before intake.
    pub baseline_minutes: f64,
    /// Recording time after intake.
    pub post_drug_hours: f64,
    /// Stress tests; by convention the first ends at intake and the second
    /// starts three hours after.
    pub stress_windows: Vec<StressWindow>,
    pub drug_effect: DrugEffect,
    pub hr_baseline_bpm: HrBaseline,
    /// Heart-rate elevation inside a stress window.
    pub stress_hr_increase_bpm: f64,
    /// Recovery time constant once a stress window ends.
    pub stress_recovery_tau_min: f64,
    /// White-noise level relative to the clean signal's standard deviation.
    pub noise_sigma: f64,
    /// Per-beat RR jitter: sigma in seconds per bpm of current heart rate.
    pub rr_jitter_s_per_bpm: f64,
    /// Slow sinusoidal heart-rate drift.
    pub hr_drift_amplitude_bpm: f64,
    pub hr_drift_period_s: f64,
    /// Spacing between consecutive record start times.
    pub record_interval_s: f64,
    pub record_duration_s: f64,
    pub fs: f64,
    /// Length of the stress-and-drug zone that opens when the post-intake
    /// stress test ends.
    pub st_plus_window_s: f64,
    pub seed: u64,
}

impl Default for SyntheticProtocolSpec {
    fn default() -> Self {
        SyntheticProtocolSpec {
            n_patients: 10,
            baseline_minutes: 90.0,
            post_drug_hours: 5.0,
            stress_windows: vec![
                StressWindow { start_s: -900.0, end_s: 0.0 },
                StressWindow { start_s: 3.0 * 3600.0, end_s: 3.0 * 3600.0 + 900.0 },
            ],
            drug_effect: DrugEffect {
                qt_prolongation_ms: 60.0,
                hr_reduction_bpm: 12.0,
                onset_tau_min: 30.0,
                decay_tau_min: 120.0,
            },
            hr_baseline_bpm: HrBaseline { mean_bpm: 70.0, sd_bpm: 6.0 },
            stress_hr_increase_bpm: 25.0,
            stress_recovery_tau_min: 12.0,
            noise_sigma: 0.05,
            rr_jitter_s_per_bpm: 0.0002,
            hr_drift_amplitude_bpm: 1.5,
            hr_drift_period_s: 300.0,
            record_interval_s: 300.0,
            record_duration_s: 10.0,
            fs: 500.0,
            st_plus_window_s: 1800.0,
            seed: 0,
        }
    }
}

impl SyntheticProtocolSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.n_patients == 0 {
            return Err(DataError::Config("n_patients must be >= 1".into()));
        }
        for (name, v) in [
            ("baseline_minutes", self.baseline_minutes),
            ("post_drug_hours", self.post_drug_hours),
            ("record_interval_s", self.record_interval_s),
            ("record_duration_s", self.record_duration_s),
            ("fs", self.fs),
            ("st_plus_window_s", self.st_plus_window_s),
            ("hr_drift_period_s", self.hr_drift_period_s),
        ] {
            if !(v > 0.0) {
                return Err(DataError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.drug_effect.qt_prolongation_ms < 0.0 {
            return Err(DataError::Config("qt_prolongation_ms must be >= 0".into()));
        }
        if !(self.hr_baseline_bpm.mean_bpm > 20.0) || self.hr_baseline_bpm.sd_bpm < 0.0 {
            return Err(DataError::Config("hr_baseline_bpm out of range".into()));
        }
        if self.noise_sigma < 0.0 {
            return Err(DataError::Config("noise_sigma must be >= 0".into()));
        }
        for w in &self.stress_windows {
            if !(w.start_s < w.end_s) {
                return Err(DataError::Config(format!(
                    "stress window [{}, {}] is empty",
                    w.start_s, w.end_s
                )));
            }
        }
        Ok(())
    }

    /// Recording start relative to intake.
    pub fn recording_start_s(&self) -> f64 {
        -self.baseline_minutes * 60.0
    }

    /// Recording end relative to intake.
    pub fn recording_end_s(&self) -> f64 {
        self.post_drug_hours * 3600.0
    }
}
