//! Dataset index: record listing with partition assignments, augmentation
//! provenance, and generator ground truth.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::DataError;
use crate::signal::{Label, ProtocolZone};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Partition {
    Train,
    Validation,
    Evaluation,
    Holdout,
    /// Not used by any split (dropped by balancing, or not yet partitioned).
    Unassigned,
}

/// One indexed record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// CSV path relative to the dataset root.
    pub path: String,
    pub record_id: String,
    pub patient_id: String,
    pub label: Label,
    pub zone: ProtocolZone,
    pub fs: f64,
    /// Rate the signal passed through; augmentation provenance.
    pub source_fs: f64,
    pub partition: Partition,
    /// Origin record when this entry is a resampling-augmented copy.
    pub augmented_from: Option<String>,
    /// Record start relative to intake, seconds.
    pub t_start_s: f64,
    pub true_mean_hr_bpm: f64,
    pub true_qt_s: f64,
    pub effect_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub partition_ratios: Option<(f64, f64, f64, f64)>,
    /// Rates used to augment train/validation/evaluation partitions.
    pub train_rates: Vec<f64>,
    /// Rates the holdout partition was fanned out to.
    pub holdout_rates: Vec<f64>,
    /// Patients whose training records could not be balanced.
    pub unbalanced_patients: Vec<String>,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        let body = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, body).map_err(|e| DataError::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let body = fs::read_to_string(path).map_err(|e| DataError::io(path.display().to_string(), e))?;
        serde_json::from_str(&body).map_err(|e| DataError::Malformed {
            what: "manifest",
            path: path.display().to_string(),
            msg: e.to_string(),
        })
    }

    /// Unique patient ids in first-appearance order.
    pub fn patients(&self) -> Vec<String> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for e in &self.entries {
            if seen.insert(e.patient_id.clone()) {
                out.push(e.patient_id.clone());
            }
        }
        out
    }

    pub fn entries_in(&self, partition: Partition) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.partition == partition)
    }

    /// Checks that no patient appears in two partitions.
    pub fn assert_patient_disjoint(&self) -> Result<(), DataError> {
        let mut seen: BTreeMap<&str, Partition> = BTreeMap::new();
        for e in &self.entries {
            if e.partition == Partition::Unassigned {
                continue;
            }
            match seen.get(e.patient_id.as_str()) {
                Some(p) if *p != e.partition => {
                    return Err(DataError::InvalidArgument(format!(
                        "patient {} appears in {:?} and {:?}",
                        e.patient_id, p, e.partition
                    )))
                }
                _ => {
                    seen.insert(&e.patient_id, e.partition);
                }
            }
        }
        Ok(())
    }
}

/// Splits patients into train/validation/evaluation/holdout by the given
/// ratios. The split is by patient, so partitions are patient-disjoint by
/// construction; record shares approximate the ratios.
pub fn partition(
    manifest: &mut DatasetManifest,
    ratios: (f64, f64, f64, f64),
    seed: u64,
) -> Result<(), DataError> {
    let (a, b, c, d) = ratios;
    if (a + b + c + d - 1.0).abs() > 1e-9 || a < 0.0 || b < 0.0 || c < 0.0 || d < 0.0 {
        return Err(DataError::InvalidArgument(format!(
            "partition ratios {ratios:?} must be nonnegative and sum to 1"
        )));
    }
    let mut patients = manifest.patients();
    if patients.len() < 4 {
        return Err(DataError::InvalidArgument(format!(
            "need at least 4 patients to fill 4 partitions, got {}",
            patients.len()
        )));
    }
    patients.sort();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    patients.shuffle(&mut rng);

    // Floor allocation, remainder to the largest fractional parts.
    let n = patients.len();
    let shares = [a, b, c, d];
    let mut counts: Vec<usize> = shares.iter().map(|r| (r * n as f64).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut fractions: Vec<(usize, f64)> = shares
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r * n as f64 - counts[i] as f64))
        .collect();
    fractions.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));
    for k in 0..n - assigned {
        counts[fractions[k % 4].0] += 1;
    }

    let mut assignment: BTreeMap<String, Partition> = BTreeMap::new();
    let mut idx = 0;
    for (count, part) in counts.iter().zip([
        Partition::Train,
        Partition::Validation,
        Partition::Evaluation,
        Partition::Holdout,
    ]) {
        for _ in 0..*count {
            assignment.insert(patients[idx].clone(), part);
            idx += 1;
        }
    }

    for e in &mut manifest.entries {
        e.partition = assignment[&e.patient_id];
    }
    manifest.partition_ratios = Some(ratios);
    manifest.seed = seed;
    Ok(())
}

/// Balances the training partition per patient: the surplus class (by the
/// protocol, Sot+) is subsampled to the Sot- count, stratified so each
/// post-intake hour contributes approximately equally. Dropped records move
/// to `Unassigned`. Patients lacking one class keep everything and are
/// flagged in the manifest.
pub fn balance_training(manifest: &mut DatasetManifest, seed: u64) -> Result<(), DataError> {
    if manifest.entries_in(Partition::Train).next().is_none() {
        return Err(DataError::InvalidArgument("training partition is empty".into()));
    }
    let mut flagged = Vec::new();
    let mut drop_ids: Vec<String> = Vec::new();

    let patients = manifest.patients();
    for pid in &patients {
        let minus: Vec<&ManifestEntry> = manifest
            .entries_in(Partition::Train)
            .filter(|e| &e.patient_id == pid && e.label == Label::SotMinus)
            .collect();
        let plus: Vec<&ManifestEntry> = manifest
            .entries_in(Partition::Train)
            .filter(|e| &e.patient_id == pid && e.label == Label::SotPlus)
            .collect();
        if minus.is_empty() && plus.is_empty() {
            continue;
        }
        if minus.is_empty() || plus.len() < minus.len() {
            flagged.push(pid.clone());
            continue;
        }
        if plus.len() == minus.len() {
            continue;
        }

        // Stratify the kept Sot+ records by post-intake hour.
        let mut buckets: BTreeMap<i64, Vec<&ManifestEntry>> = BTreeMap::new();
        for e in &plus {
            buckets.entry((e.t_start_s / 3600.0).floor() as i64).or_default().push(e);
        }
        let target = minus.len();
        let n_buckets = buckets.len();
        let base = target / n_buckets;
        let rem = target % n_buckets;
        let mut quotas: BTreeMap<i64, usize> = buckets
            .keys()
            .enumerate()
            .map(|(i, h)| (*h, base + usize::from(i < rem)))
            .collect();
        // Push quota overflow from thin buckets onto the others.
        let mut deficit = 0;
        for (h, entries) in &buckets {
            let q = quotas[h];
            if entries.len() < q {
                deficit += q - entries.len();
                *quotas.get_mut(h).unwrap() = entries.len();
            }
        }
        while deficit > 0 {
            let mut moved = false;
            for (h, entries) in &buckets {
                if deficit == 0 {
                    break;
                }
                let q = quotas.get_mut(h).unwrap();
                if *q < entries.len() {
                    *q += 1;
                    deficit -= 1;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }

        let mut rng = ChaCha12Rng::seed_from_u64(split_for_patient(seed, pid));
        for (h, entries) in &buckets {
            let keep = quotas[h];
            let mut ids: Vec<&String> = entries.iter().map(|e| &e.record_id).collect();
            ids.sort();
            ids.shuffle(&mut rng);
            for id in ids.into_iter().skip(keep) {
                drop_ids.push(id.clone());
            }
        }
    }

    let drop: std::collections::HashSet<String> = drop_ids.into_iter().collect();
    for e in &mut manifest.entries {
        if drop.contains(&e.record_id) {
            e.partition = Partition::Unassigned;
        }
    }
    manifest.unbalanced_patients = flagged;
    Ok(())
}

fn split_for_patient(seed: u64, pid: &str) -> u64 {
    let mut h = seed ^ 0xA076_1D64_78BD_642F;
    for b in pid.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x100_0000_01B3);
    }
    h
}
