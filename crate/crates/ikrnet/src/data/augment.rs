//! Sampling-rate augmentation: down to a lower rate and back, simulating
//! recordings captured by lower-fidelity devices.

use std::path::Path;

use rayon::prelude::*;

use crate::data::manifest::{DatasetManifest, ManifestEntry, Partition};
use crate::error::DataError;
use crate::signal::io::{read_record, write_record};
use crate::signal::resample;

/// Default rates added to train/validation/evaluation records.
pub const DEFAULT_TRAIN_RATES: [f64; 2] = [180.0, 250.0];
/// Default rate fan-out of the holdout partition.
pub const DEFAULT_HOLDOUT_RATES: [f64; 8] = [150.0, 180.0, 215.0, 250.0, 300.0, 350.0, 425.0, 500.0];

/// Augments the dataset rooted at `root` in place.
///
/// Train/validation/evaluation records gain one resampled copy per rate in
/// `train_rates` (rates equal to the record's own rate are skipped;
/// originals are retained), multiplying those partitions by
/// `1 + |train_rates \ {fs}|`. Each holdout record is fanned out to exactly
/// `holdout_rates`, the record itself serving as its own-rate variant.
/// Copies go down to the rate and back up to the original rate; `source_fs`
/// records the provenance. Re-running is a no-op for records that already
/// have their variants.
pub fn augment_sampling_rates(
    manifest: &mut DatasetManifest,
    root: &Path,
    train_rates: &[f64],
    holdout_rates: &[f64],
) -> Result<(), DataError> {
    for &r in train_rates.iter().chain(holdout_rates) {
        if !(r > 0.0) {
            return Err(DataError::InvalidArgument(format!("rate {r} must be positive")));
        }
    }

    let existing: std::collections::HashSet<String> =
        manifest.entries.iter().map(|e| e.record_id.clone()).collect();

    // (origin index, rate) pairs still missing their variant.
    let mut jobs: Vec<(usize, f64)> = Vec::new();
    let mut retire: Vec<usize> = Vec::new();
    for (i, e) in manifest.entries.iter().enumerate() {
        if e.augmented_from.is_some() {
            continue;
        }
        let rates: &[f64] = match e.partition {
            Partition::Train | Partition::Validation | Partition::Evaluation => train_rates,
            Partition::Holdout => holdout_rates,
            Partition::Unassigned => continue,
        };
        for &r in rates {
            if r > e.fs {
                return Err(DataError::InvalidArgument(format!(
                    "rate {r} exceeds source rate {} of record {}",
                    e.fs, e.record_id
                )));
            }
            if r == e.fs {
                continue;
            }
            if !existing.contains(&variant_id(&e.record_id, r)) {
                jobs.push((i, r));
            }
        }
        // A holdout original not covered by the schedule leaves the split.
        if e.partition == Partition::Holdout && !holdout_rates.contains(&e.fs) {
            retire.push(i);
        }
    }

    let new_entries: Vec<ManifestEntry> = jobs
        .par_iter()
        .map(|&(i, rate)| {
            let origin = &manifest.entries[i];
            let csv = root.join(&origin.path);
            let (record, sidecar) = read_record(&csv)?;
            let down = resample(&record, rate)?;
            let mut up = resample(&down, record.fs)?;
            up.record_id = variant_id(&origin.record_id, rate);
            up.source_fs = rate;
            write_record(&csv.parent().unwrap_or(root).to_path_buf(), &up, &sidecar.beat_onsets_s)?;
            Ok(ManifestEntry {
                path: origin
                    .path
                    .replace(&format!("{}.csv", origin.record_id), &format!("{}.csv", up.record_id)),
                record_id: up.record_id.clone(),
                source_fs: rate,
                augmented_from: Some(origin.record_id.clone()),
                ..origin.clone()
            })
        })
        .collect::<Result<Vec<_>, DataError>>()?;

    for i in retire {
        manifest.entries[i].partition = Partition::Unassigned;
    }
    manifest.entries.extend(new_entries);
    manifest.train_rates = train_rates.to_vec();
    manifest.holdout_rates = holdout_rates.to_vec();
    Ok(())
}

fn variant_id(origin: &str, rate: f64) -> String {
    format!("{origin}_a{rate:.0}")
}
