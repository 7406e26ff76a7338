//! Synthetic dataset generation, partitioning, balancing, augmentation, and
//! the on-disk dataset layout.

mod augment;
mod generate;
mod manifest;
mod spec;
mod zones;

pub use augment::{augment_sampling_rates, DEFAULT_HOLDOUT_RATES, DEFAULT_TRAIN_RATES};
pub use generate::{effect_level, generate, GeneratedRecord};
pub use manifest::{balance_training, partition, DatasetManifest, ManifestEntry, Partition};
pub use spec::{DrugEffect, HrBaseline, StressWindow, SyntheticProtocolSpec};
pub use zones::{assign_zone, ProtocolTimeline};

use std::fs;
use std::path::Path;

use crate::error::DataError;
use crate::signal::io::write_record;

/// Materializes records under `root/records/` and the manifest at
/// `root/manifest.json`.
pub fn write_dataset(
    root: &Path,
    records: &[GeneratedRecord],
    manifest: &DatasetManifest,
) -> Result<(), DataError> {
    let record_dir = root.join("records");
    fs::create_dir_all(&record_dir).map_err(|e| DataError::io(record_dir.display().to_string(), e))?;
    for g in records {
        write_record(&record_dir, &g.record, &g.beat_onsets_s)?;
    }
    manifest.save(&root.join("manifest.json"))
}

/// Ratio split used throughout: 70/10/10/10.
pub const DEFAULT_PARTITION_RATIOS: (f64, f64, f64, f64) = (0.70, 0.10, 0.10, 0.10);

/// Generates, partitions, balances, and writes a dataset in one step.
pub fn prepare_dataset(spec: &SyntheticProtocolSpec, root: &Path) -> Result<DatasetManifest, DataError> {
    let (records, mut manifest) = generate(spec)?;
    partition(&mut manifest, DEFAULT_PARTITION_RATIOS, spec.seed)?;
    balance_training(&mut manifest, spec.seed)?;
    write_dataset(root, &records, &manifest)?;
    Ok(manifest)
}
