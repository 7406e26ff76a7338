//! R-peak location and heart-rate estimation over known or detected beat
//! windows.

use std::ops::Range;

use crate::error::SignalError;
use crate::signal::{population_stats, EcgRecord};

/// R-peak indices and the instantaneous/average heart rate derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct HeartRateSeries {
    /// Sample index of the R peak in each beat window, strictly increasing.
    pub peak_indices: Vec<usize>,
    /// `60 fs / (n_{i+1} - n_i)` for consecutive peaks; one fewer entry than
    /// `peak_indices`.
    pub instantaneous_bpm: Vec<f64>,
    pub average_bpm: f64,
}

/// Estimates heart rate from per-beat windows.
///
/// The R peak of window `i` is the earliest index maximizing `|x[n]|` inside
/// the window; instantaneous rates come from consecutive peak distances and
/// the average is their mean.
pub fn estimate_heart_rate(
    record: &EcgRecord,
    beat_windows: &[Range<usize>],
) -> Result<HeartRateSeries, SignalError> {
    if beat_windows.len() < 2 {
        return Err(SignalError::InsufficientBeats {
            needed: 2,
            got: beat_windows.len(),
        });
    }
    let n = record.len();
    let mut prev_end = 0usize;
    for (i, w) in beat_windows.iter().enumerate() {
        if w.start >= w.end || w.end > n {
            return Err(SignalError::InvalidArgument(format!(
                "beat window {i} ({}..{}) outside record of length {n}",
                w.start, w.end
            )));
        }
        if i > 0 && w.start < prev_end {
            return Err(SignalError::InvalidArgument(format!(
                "beat window {i} overlaps or precedes its predecessor"
            )));
        }
        prev_end = w.end;
    }

    let peak_indices: Vec<usize> = beat_windows
        .iter()
        .map(|w| {
            let mut best = w.start;
            let mut best_val = record.samples[w.start].abs();
            for i in w.clone() {
                let v = record.samples[i].abs();
                if v > best_val {
                    best_val = v;
                    best = i;
                }
            }
            best
        })
        .collect();

    let instantaneous_bpm: Vec<f64> = peak_indices
        .windows(2)
        .map(|p| 60.0 * record.fs / (p[1] - p[0]) as f64)
        .collect();
    let average_bpm = instantaneous_bpm.iter().sum::<f64>() / instantaneous_bpm.len() as f64;

    Ok(HeartRateSeries { peak_indices, instantaneous_bpm, average_bpm })
}

/// Tuning for the amplitude-threshold beat detector.
#[derive(Debug, Clone, Copy)]
pub struct BeatWindowConfig {
    /// Peak acceptance threshold as a fraction of the largest absolute
    /// standardized amplitude.
    pub threshold_frac: f64,
    /// Minimum spacing between accepted peaks, in seconds.
    pub refractory_s: f64,
}

impl Default for BeatWindowConfig {
    fn default() -> Self {
        BeatWindowConfig { threshold_frac: 0.55, refractory_s: 0.2 }
    }
}

/// Detects one window per beat from the signal alone.
///
/// Works on the standardized signal: candidate peaks are local maxima of
/// `|x|` above a fraction of the global maximum; peaks closer than the
/// refractory period keep only the larger one. Window boundaries are the
/// midpoints between surviving peaks. Flat input yields no windows.
pub fn detect_beat_windows(record: &EcgRecord) -> Vec<Range<usize>> {
    detect_beat_windows_with(record, BeatWindowConfig::default())
}

pub fn detect_beat_windows_with(record: &EcgRecord, cfg: BeatWindowConfig) -> Vec<Range<usize>> {
    let n = record.len();
    if n == 0 {
        return Vec::new();
    }
    let (mean, std) = population_stats(&record.samples);
    if std == 0.0 {
        return Vec::new();
    }
    let abs: Vec<f64> = record.samples.iter().map(|v| ((v - mean) / std).abs()).collect();
    let max = abs.iter().cloned().fold(0.0, f64::max);
    let threshold = cfg.threshold_frac * max;
    let refractory = (cfg.refractory_s * record.fs).round() as usize;

    // Local maxima above threshold; boundary samples count with one neighbor.
    let mut peaks: Vec<usize> = Vec::new();
    for i in 0..n {
        if abs[i] < threshold {
            continue;
        }
        let left_ok = i == 0 || abs[i] >= abs[i - 1];
        let right_ok = i + 1 == n || abs[i] > abs[i + 1];
        if left_ok && right_ok {
            peaks.push(i);
        }
    }
    // Enforce the refractory period, keeping the larger peak of each conflict.
    let mut kept: Vec<usize> = Vec::new();
    for &p in &peaks {
        match kept.last() {
            Some(&q) if p - q < refractory => {
                if abs[p] > abs[q] {
                    *kept.last_mut().unwrap() = p;
                }
            }
            _ => kept.push(p),
        }
    }
    if kept.is_empty() {
        return Vec::new();
    }

    let mut windows = Vec::with_capacity(kept.len());
    let mut start = 0usize;
    for (i, &p) in kept.iter().enumerate() {
        let end = if i + 1 < kept.len() { (p + kept[i + 1]) / 2 + 1 } else { n };
        windows.push(start..end);
        start = end;
    }
    windows
}
