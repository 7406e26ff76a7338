//! Sampling-rate conversion by natural cubic spline interpolation.

use crate::error::SignalError;
use crate::signal::spline::UniformCubicSpline;
use crate::signal::EcgRecord;

/// Resamples a record to `target_fs` by evaluating a cubic spline fit of the
/// input on the new uniform grid over the same duration.
///
/// The output length is `floor(duration * target_fs)`. Evaluation is clamped
/// to the input's time support; `source_fs` provenance is carried over.
pub fn resample(record: &EcgRecord, target_fs: f64) -> Result<EcgRecord, SignalError> {
    if !(target_fs > 0.0) {
        return Err(SignalError::InvalidArgument(format!(
            "target rate must be positive, got {target_fs}"
        )));
    }
    if record.len() < 4 {
        return Err(SignalError::InvalidArgument(format!(
            "resampling needs at least 4 samples, record {} has {}",
            record.record_id,
            record.len()
        )));
    }
    let spline = UniformCubicSpline::fit(&record.samples, 1.0 / record.fs)
        .expect("spline preconditions checked above");
    let n_out = (record.duration_s() * target_fs).floor() as usize;
    if n_out == 0 {
        return Err(SignalError::InvalidArgument(format!(
            "target rate {target_fs} Hz yields an empty record"
        )));
    }
    let samples = (0..n_out).map(|i| spline.evaluate(i as f64 / target_fs)).collect();
    let mut out = record.clone();
    out.samples = samples;
    out.fs = target_fs;
    Ok(out)
}
