//! Synthetic ECG synthesis with a controllable drug footprint.
//!
//! Beats are P/Q/R/S/T Gaussian composites on an RR grid driven by a
//! per-patient heart-rate trajectory. The footprint enters twice: the T wave
//! shifts right as the QT interval stretches, and the heart rate drops, both
//! following an exponential-onset effect curve after intake.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::data::manifest::{DatasetManifest, ManifestEntry, Partition};
use crate::data::spec::SyntheticProtocolSpec;
use crate::data::zones::{assign_zone, ProtocolTimeline};
use crate::error::DataError;
use crate::signal::{
    sample, Beat, BeatWaveform, ContinuousBeatModel, EcgRecord, GaussianWave, Label,
};

/// One generated record plus its ground truth.
#[derive(Debug, Clone)]
pub struct GeneratedRecord {
    pub record: EcgRecord,
    /// Onset of each beat whose R peak lies inside the record, seconds from
    /// record start. Onsets sit at a fixed offset before the R peak, so
    /// consecutive differences equal true RR intervals.
    pub beat_onsets_s: Vec<f64>,
    /// Record start relative to intake.
    pub t_start_s: f64,
    /// Mean of the instantaneous rates implied by the beat onsets.
    pub true_mean_hr_bpm: f64,
    /// QT interval in force at the record start.
    pub true_qt_s: f64,
    /// Drug effect level in [0, 1] at the record start.
    pub effect_level: f64,
}

/// Morphology and physiology of one synthetic patient.
struct PatientProfile {
    base_hr_bpm: f64,
    qt_base_s: f64,
    r_offset_s: f64,
    drift_phase: f64,
    p_amp: f64,
    q_amp: f64,
    r_amp: f64,
    s_amp: f64,
    t_amp: f64,
    t_width_s: f64,
}

impl PatientProfile {
    fn draw(spec: &SyntheticProtocolSpec, rng: &mut ChaCha12Rng) -> Self {
        let hr = Normal::new(spec.hr_baseline_bpm.mean_bpm, spec.hr_baseline_bpm.sd_bpm)
            .expect("valid hr distribution");
        let qt_base_s = rng.random_range(0.37..0.41);
        PatientProfile {
            base_hr_bpm: hr.sample(rng).clamp(45.0, 110.0),
            qt_base_s,
            r_offset_s: rng.random_range(0.18..0.22),
            drift_phase: rng.random_range(0.0..std::f64::consts::TAU),
            p_amp: rng.random_range(0.09..0.15),
            q_amp: -rng.random_range(0.08..0.12),
            r_amp: rng.random_range(0.95..1.25),
            s_amp: -rng.random_range(0.2..0.3),
            t_amp: rng.random_range(0.25..0.35),
            // T duration scales with the patient's repolarization interval.
            t_width_s: 0.13 * qt_base_s + rng.random_range(-0.001..0.001),
        }
    }
}

/// Drug effect level at `t_s` (relative to intake): exponential onset,
/// plateau through hour five, exponential decay beyond.
pub fn effect_level(spec: &SyntheticProtocolSpec, t_s: f64) -> f64 {
    if t_s <= 0.0 {
        return 0.0;
    }
    let plateau_end = 5.0 * 3600.0;
    let onset_tau = spec.drug_effect.onset_tau_min * 60.0;
    let rise = 1.0 - (-t_s.min(plateau_end) / onset_tau).exp();
    if t_s <= plateau_end {
        rise
    } else {
        let decay_tau = spec.drug_effect.decay_tau_min * 60.0;
        rise * (-(t_s - plateau_end) / decay_tau).exp()
    }
}

/// Stress contribution to the heart rate at `t_s`: full inside a window,
/// exponential recovery after it ends.
fn stress_delta_bpm(spec: &SyntheticProtocolSpec, t_s: f64) -> f64 {
    let tau = spec.stress_recovery_tau_min * 60.0;
    let mut delta: f64 = 0.0;
    for w in &spec.stress_windows {
        if t_s >= w.start_s && t_s <= w.end_s {
            delta = delta.max(spec.stress_hr_increase_bpm);
        } else if t_s > w.end_s {
            delta = delta.max(spec.stress_hr_increase_bpm * (-(t_s - w.end_s) / tau).exp());
        }
    }
    delta
}

/// Clean (jitter-free) heart-rate trajectory for one patient.
fn target_hr_bpm(spec: &SyntheticProtocolSpec, profile: &PatientProfile, t_s: f64) -> f64 {
    let drift = spec.hr_drift_amplitude_bpm
        * (std::f64::consts::TAU * t_s / spec.hr_drift_period_s + profile.drift_phase).sin();
    (profile.base_hr_bpm - spec.drug_effect.hr_reduction_bpm * effect_level(spec, t_s)
        + stress_delta_bpm(spec, t_s)
        + drift)
        .max(30.0)
}

fn split_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 over the pair; decorrelates per-patient / per-record streams.
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Synthesizes the record starting at `t_start_s` for patient `patient_idx`.
fn synthesize_record(
    spec: &SyntheticProtocolSpec,
    profile: &PatientProfile,
    patient_idx: usize,
    record_idx: usize,
    t_start_s: f64,
) -> Result<GeneratedRecord, DataError> {
    let duration = spec.record_duration_s;
    let mut rng = ChaCha12Rng::seed_from_u64(split_seed(
        split_seed(spec.seed, patient_idx as u64 + 1),
        0x5EC0_4D00 + record_idx as u64,
    ));
    let jitter = Normal::new(0.0, 1.0).expect("unit normal");

    // RR grid: first beat opens the record, beats run past the end so the
    // final partial beat keeps the waveform continuous.
    let mut onsets = vec![0.0_f64];
    loop {
        let onset = *onsets.last().unwrap();
        let hr = target_hr_bpm(spec, profile, t_start_s + onset);
        let sigma = spec.rr_jitter_s_per_bpm * hr;
        let rr = (60.0 / hr + sigma * jitter.sample(&mut rng)).clamp(0.3, 2.0);
        let next = onset + rr;
        onsets.push(next);
        if next >= duration {
            break;
        }
    }

    let qt_now = profile.qt_base_s
        + spec.drug_effect.qt_prolongation_ms / 1000.0 * effect_level(spec, t_start_s);

    // Beats whose R peak falls this close to the record end are left
    // waveless: a truncated R upstroke at the boundary is not recoverable by
    // any detector, so the window ends in diastole instead.
    let r_cutoff = duration - 0.04;

    let mut beats = Vec::with_capacity(onsets.len() - 1);
    let mut recorded_onsets = Vec::new();
    for i in 0..onsets.len() - 1 {
        let onset = onsets[i];
        let offset = onsets[i + 1].min(duration);
        let r = onset + profile.r_offset_s;
        let waves = if r < r_cutoff {
            recorded_onsets.push(onset);
            // QT runs from QRS onset (R - 50 ms) to T-wave end (center plus
            // two widths). Prolongation stretches repolarization, so the T
            // wave widens in proportion and its center shifts to keep
            // T_end - QRS_onset equal to the prolonged interval.
            let t_width_now = profile.t_width_s * qt_now / profile.qt_base_s;
            let t_center = r - 0.05 + qt_now - 2.0 * t_width_now;
            vec![
                GaussianWave { amplitude: profile.p_amp, center_s: r - 0.16, width_s: 0.025 },
                GaussianWave { amplitude: profile.q_amp, center_s: r - 0.032, width_s: 0.009 },
                GaussianWave { amplitude: profile.r_amp, center_s: r, width_s: 0.008 },
                GaussianWave { amplitude: profile.s_amp, center_s: r + 0.032, width_s: 0.009 },
                GaussianWave { amplitude: profile.t_amp, center_s: t_center, width_s: t_width_now },
            ]
        } else {
            Vec::new()
        };
        beats.push(Beat { onset_s: onset, offset_s: offset, waveform: BeatWaveform::Composite(waves) });
        if offset >= duration {
            break;
        }
    }
    let model = ContinuousBeatModel::new(beats)?;
    let mut record = sample(&model, spec.fs)?;

    if spec.noise_sigma > 0.0 {
        let (_, std) = crate::signal::population_stats(&record.samples);
        let scale = spec.noise_sigma * std;
        for v in &mut record.samples {
            *v += scale * jitter.sample(&mut rng);
        }
    }

    let diffs: Vec<f64> = recorded_onsets.windows(2).map(|w| w[1] - w[0]).collect();
    let true_mean_hr_bpm = if diffs.is_empty() {
        f64::NAN
    } else {
        diffs.iter().map(|rr| 60.0 / rr).sum::<f64>() / diffs.len() as f64
    };

    record.record_id = format!("p{patient_idx:03}_t{record_idx:05}");
    record.patient_id = format!("p{patient_idx:03}");
    record.label = Some(if t_start_s + duration <= 0.0 { Label::SotMinus } else { Label::SotPlus });

    Ok(GeneratedRecord {
        record,
        beat_onsets_s: recorded_onsets,
        t_start_s,
        true_mean_hr_bpm,
        true_qt_s: qt_now,
        effect_level: effect_level(spec, t_start_s),
    })
}

/// Generates the full synthetic dataset described by `spec`.
///
/// Records are laid on the protocol timeline every `record_interval_s`;
/// records that would straddle intake are skipped so every record has an
/// unambiguous label. Zones follow the protocol timeline. Deterministic in
/// `spec.seed`, patient by patient.
pub fn generate(
    spec: &SyntheticProtocolSpec,
) -> Result<(Vec<GeneratedRecord>, DatasetManifest), DataError> {
    spec.validate()?;
    let timeline = ProtocolTimeline::from_spec(spec);

    // Record start times shared by all patients.
    let mut starts = Vec::new();
    let mut t = spec.recording_start_s();
    while t + spec.record_duration_s <= spec.recording_end_s() {
        let straddles_intake = t < 0.0 && t + spec.record_duration_s > 0.0;
        if !straddles_intake {
            starts.push(t);
        }
        t += spec.record_interval_s;
    }

    let per_patient: Vec<Vec<GeneratedRecord>> = (0..spec.n_patients)
        .into_par_iter()
        .map(|p| {
            let mut patient_rng = ChaCha12Rng::seed_from_u64(split_seed(spec.seed, p as u64 + 1));
            let profile = PatientProfile::draw(spec, &mut patient_rng);
            starts
                .iter()
                .enumerate()
                .map(|(i, &t0)| {
                    let mut g = synthesize_record(spec, &profile, p, i, t0)?;
                    g.record.zone = Some(assign_zone(t0, &timeline));
                    Ok(g)
                })
                .collect::<Result<Vec<_>, DataError>>()
        })
        .collect::<Result<Vec<_>, DataError>>()?;

    let records: Vec<GeneratedRecord> = per_patient.into_iter().flatten().collect();
    let entries = records
        .iter()
        .map(|g| ManifestEntry {
            path: format!("records/{}.csv", g.record.record_id),
            record_id: g.record.record_id.clone(),
            patient_id: g.record.patient_id.clone(),
            label: g.record.label.expect("generated records are labeled"),
            zone: g.record.zone.expect("generated records are zoned"),
            fs: g.record.fs,
            source_fs: g.record.source_fs,
            partition: Partition::Unassigned,
            augmented_from: None,
            t_start_s: g.t_start_s,
            true_mean_hr_bpm: g.true_mean_hr_bpm,
            true_qt_s: g.true_qt_s,
            effect_level: g.effect_level,
        })
        .collect();

    let manifest = DatasetManifest {
        seed: spec.seed,
        partition_ratios: None,
        train_rates: Vec::new(),
        holdout_rates: Vec::new(),
        unbalanced_patients: Vec::new(),
        entries,
    };
    Ok((records, manifest))
}
