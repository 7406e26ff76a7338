//! Dataset loading, the training loop, and batched inference.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DatasetManifest, ManifestEntry, Partition};
use crate::error::TrainError;
use crate::eval::{PredictionEntry, PredictionSet};
use crate::model::IKrNet;
use crate::nn::{bce_loss, clip_grad_norm, no_grad, AdamW, AdamWConfig, Tensor};
use crate::scalar::Scalar;
use crate::signal::io::read_record;
use crate::signal::{detect_beat_windows, estimate_heart_rate, standardize, Label, ProtocolZone};

/// Training hyperparameters. Defaults follow the recipe: AdamW at lr 1e-3,
/// batch 64, ten epochs, global-norm gradient clip at 5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub grad_clip: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 10, batch_size: 64, lr: 1e-3, weight_decay: 0.01, grad_clip: 5.0, seed: 0 }
    }
}

/// A record ready for the network: standardized samples plus the metadata
/// evaluation needs.
#[derive(Debug, Clone)]
pub struct LoadedRecord<S: Scalar> {
    pub record_id: String,
    pub patient_id: String,
    pub zone: ProtocolZone,
    pub source_fs: f64,
    pub label: Label,
    pub input: Vec<S>,
    /// Detector-estimated average heart rate over the record.
    pub average_bpm: Option<f64>,
}

/// Loads and standardizes every record of `partition`, estimating each
/// record's heart rate on the way.
pub fn load_partition<S: Scalar>(
    manifest: &DatasetManifest,
    root: &Path,
    partition: Partition,
) -> Result<Vec<LoadedRecord<S>>, TrainError> {
    let entries: Vec<&ManifestEntry> = manifest.entries_in(partition).collect();
    entries
        .par_iter()
        .map(|e| {
            let (record, _) = read_record(&root.join(&e.path))?;
            let std = standardize(&record).map_err(crate::error::DataError::from)?;
            let windows = detect_beat_windows(&std);
            let average_bpm = estimate_heart_rate(&std, &windows).ok().map(|h| h.average_bpm);
            Ok(LoadedRecord {
                record_id: e.record_id.clone(),
                patient_id: e.patient_id.clone(),
                zone: e.zone,
                source_fs: e.source_fs,
                label: e.label,
                input: std.samples.iter().map(|v| S::from_f64(*v)).collect(),
                average_bpm,
            })
        })
        .collect()
}

fn batch_tensors<S: Scalar>(records: &[&LoadedRecord<S>]) -> Result<(Tensor<S>, Tensor<S>), TrainError> {
    let len = records[0].input.len();
    let mut data = Vec::with_capacity(records.len() * len);
    let mut targets = Vec::with_capacity(records.len());
    for r in records {
        if r.input.len() != len {
            return Err(TrainError::Setup(format!(
                "record {} has length {}, batch expects {len}",
                r.record_id,
                r.input.len()
            )));
        }
        data.extend_from_slice(&r.input);
        targets.push(S::from_f64(r.label.as_target()));
    }
    Ok((
        Tensor::from_vec(vec![records.len(), 1, len], data, false),
        Tensor::from_vec(vec![records.len()], targets, false),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub log: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

/// Mean BCE loss over a set in inference mode.
pub fn evaluate_loss<S: Scalar>(
    model: &IKrNet<S>,
    records: &[LoadedRecord<S>],
    batch_size: usize,
) -> Result<f64, TrainError> {
    if records.is_empty() {
        return Err(TrainError::Setup("empty evaluation set".into()));
    }
    let mut total = 0.0;
    for chunk in records.chunks(batch_size) {
        let refs: Vec<&LoadedRecord<S>> = chunk.iter().collect();
        let (inputs, targets) = batch_tensors(&refs)?;
        let loss = no_grad(|| -> Result<f64, TrainError> {
            let scores = model.forward(&inputs, false)?;
            Ok(bce_loss(&scores, &targets)?.item().as_f64())
        })?;
        total += loss * chunk.len() as f64;
    }
    Ok(total / records.len() as f64)
}

/// Trains in place, restoring the best-validation parameters at the end.
///
/// Each epoch shuffles with a seed derived from `cfg.seed` and the epoch
/// index, so a run is reproducible end to end on one machine.
pub fn train<S: Scalar>(
    model: &IKrNet<S>,
    train_set: &[LoadedRecord<S>],
    val_set: &[LoadedRecord<S>],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome, TrainError> {
    if train_set.is_empty() || val_set.is_empty() {
        return Err(TrainError::Setup(format!(
            "need non-empty train and validation sets, got {} / {}",
            train_set.len(),
            val_set.len()
        )));
    }
    let params = model.parameters();
    let mut optimizer = AdamW::new(
        AdamWConfig { lr: cfg.lr, weight_decay: cfg.weight_decay, ..Default::default() },
        &params,
    );

    let slots = model.named_slots();
    let mut best: Option<(usize, f64, Vec<Vec<S>>)> = None;
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9));
        order.shuffle(&mut rng);

        let mut train_loss = 0.0;
        for batch_idx in order.chunks(cfg.batch_size) {
            let refs: Vec<&LoadedRecord<S>> = batch_idx.iter().map(|&i| &train_set[i]).collect();
            let (inputs, targets) = batch_tensors(&refs)?;
            model.zero_grad();
            let scores = model.forward(&inputs, true)?;
            let loss = bce_loss(&scores, &targets)?;
            train_loss += loss.item().as_f64() * refs.len() as f64;
            loss.backward();
            clip_grad_norm(&params, cfg.grad_clip);
            optimizer.step(&params);
        }
        train_loss /= train_set.len() as f64;

        let val_loss = evaluate_loss(model, val_set, cfg.batch_size)?;
        let entry = EpochLog { epoch, train_loss, val_loss };
        on_epoch(&entry);
        log.push(entry);

        let improved = best.as_ref().map(|(_, b, _)| val_loss < *b).unwrap_or(true);
        if improved {
            best = Some((epoch, val_loss, slots.iter().map(|s| s.tensor.data()).collect()));
        }
    }

    let (best_epoch, best_val_loss, snapshot) = best.expect("at least one epoch ran");
    for (slot, data) in slots.iter().zip(&snapshot) {
        slot.tensor.set_data(data);
    }
    Ok(TrainOutcome { log, best_epoch, best_val_loss })
}

/// Batched inference over a record set, producing the prediction entries
/// the evaluation framework consumes.
pub fn predict<S: Scalar>(
    model: &IKrNet<S>,
    records: &[LoadedRecord<S>],
    batch_size: usize,
) -> Result<PredictionSet, TrainError> {
    let chunks: Vec<&[LoadedRecord<S>]> = records.chunks(batch_size).collect();
    let per_chunk: Vec<Vec<PredictionEntry>> = chunks
        .par_iter()
        .map(|chunk| {
            let refs: Vec<&LoadedRecord<S>> = chunk.iter().collect();
            let (inputs, _) = batch_tensors(&refs)?;
            let scores = no_grad(|| model.forward(&inputs, false))?;
            Ok(scores
                .data()
                .iter()
                .zip(refs)
                .map(|(score, r)| {
                    let s = score.as_f64();
                    PredictionEntry {
                        record_id: r.record_id.clone(),
                        patient_id: r.patient_id.clone(),
                        zone: r.zone,
                        source_fs: r.source_fs,
                        true_label: r.label,
                        predicted_label: if s >= 0.5 { Label::SotPlus } else { Label::SotMinus },
                        score: s,
                        average_bpm: r.average_bpm,
                    }
                })
                .collect())
        })
        .collect::<Result<_, TrainError>>()?;
    Ok(PredictionSet::new(per_chunk.into_iter().flatten().collect()))
}
