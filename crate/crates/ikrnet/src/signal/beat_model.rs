//! Piecewise continuous-time ECG model: a train of beats on contiguous,
//! strictly increasing time intervals.

use crate::error::SignalError;

/// Waveform of a single beat on its interval.
#[derive(Debug, Clone, PartialEq)]
pub enum BeatWaveform {
    /// Constant amplitude (test signals).
    Constant(f64),
    /// `amp * sin(2 pi f t + phase)` with `t` absolute (test signals).
    Sinusoid { amplitude: f64, freq_hz: f64, phase: f64 },
    /// Sum of Gaussian bumps; the synthetic P/Q/R/S/T composite.
    Composite(Vec<GaussianWave>),
}

/// One Gaussian bump `amplitude * exp(-(t - center)^2 / (2 width^2))`,
/// `center` in absolute seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianWave {
    pub amplitude: f64,
    pub center_s: f64,
    pub width_s: f64,
}

impl GaussianWave {
    pub fn evaluate(&self, t: f64) -> f64 {
        let z = (t - self.center_s) / self.width_s;
        self.amplitude * (-0.5 * z * z).exp()
    }
}

/// A beat: the half-open interval it owns plus its waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Beat {
    pub onset_s: f64,
    pub offset_s: f64,
    pub waveform: BeatWaveform,
}

impl Beat {
    fn evaluate(&self, t: f64) -> f64 {
        match &self.waveform {
            BeatWaveform::Constant(a) => *a,
            BeatWaveform::Sinusoid { amplitude, freq_hz, phase } => {
                amplitude * (2.0 * std::f64::consts::PI * freq_hz * t + phase).sin()
            }
            BeatWaveform::Composite(waves) => waves.iter().map(|w| w.evaluate(t)).sum(),
        }
    }
}

/// Continuous signal defined piecewise by consecutive beats.
///
/// Beat intervals must be contiguous (`offset_i == onset_{i+1}`) and strictly
/// increasing; every time in `[t_0, t_K]` then belongs to exactly one beat
/// (the final beat owns its right endpoint).
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousBeatModel {
    beats: Vec<Beat>,
}

impl ContinuousBeatModel {
    pub fn new(beats: Vec<Beat>) -> Result<Self, SignalError> {
        if beats.is_empty() {
            return Err(SignalError::InvalidArgument("beat model requires at least one beat".into()));
        }
        for (i, b) in beats.iter().enumerate() {
            if !(b.onset_s < b.offset_s) {
                return Err(SignalError::InvalidArgument(format!(
                    "beat {i} interval [{}, {}] is not strictly increasing",
                    b.onset_s, b.offset_s
                )));
            }
            if i > 0 && beats[i - 1].offset_s != b.onset_s {
                return Err(SignalError::InvalidArgument(format!(
                    "beat {i} onset {} does not continue previous offset {}",
                    b.onset_s,
                    beats[i - 1].offset_s
                )));
            }
        }
        Ok(ContinuousBeatModel { beats })
    }

    /// Single-interval model over `[start, end]`.
    pub fn single(start_s: f64, end_s: f64, waveform: BeatWaveform) -> Result<Self, SignalError> {
        Self::new(vec![Beat { onset_s: start_s, offset_s: end_s, waveform }])
    }

    pub fn beats(&self) -> &[Beat] {
        &self.beats
    }

    pub fn start_s(&self) -> f64 {
        self.beats[0].onset_s
    }

    pub fn end_s(&self) -> f64 {
        self.beats[self.beats.len() - 1].offset_s
    }

    /// Total duration `t_K - t_0` in seconds.
    pub fn duration_s(&self) -> f64 {
        self.end_s() - self.start_s()
    }

    /// Evaluates the piecewise signal; `t` outside `[t_0, t_K]` is clamped to
    /// the owning boundary beat.
    pub fn evaluate(&self, t: f64) -> f64 {
        let beat = match self
            .beats
            .binary_search_by(|b| b.onset_s.partial_cmp(&t).unwrap())
        {
            Ok(i) => &self.beats[i],
            Err(0) => &self.beats[0],
            Err(i) => &self.beats[i - 1],
        };
        beat.evaluate(t)
    }
}
