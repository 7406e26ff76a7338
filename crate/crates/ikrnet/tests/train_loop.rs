//! Training-loop contracts: the null update, determinism, loss descent on a
//! small task, and checkpoint reload fidelity.

use ikrnet::data::{
    augment_sampling_rates, balance_training, generate, partition, write_dataset, Partition,
    SyntheticProtocolSpec, DEFAULT_PARTITION_RATIOS, DEFAULT_TRAIN_RATES,
};
use ikrnet::model::{IKrNet, IKrNetConfig};
use ikrnet::nn::checkpoint::{load_checkpoint, save_checkpoint};
use ikrnet::train::{load_partition, predict, train, LoadedRecord, TrainConfig};

fn tiny_dataset(dir: &std::path::Path, seed: u64) -> ikrnet::data::DatasetManifest {
    let spec = SyntheticProtocolSpec {
        n_patients: 8,
        record_interval_s: 1500.0,
        seed,
        ..Default::default()
    };
    let (records, mut manifest) = generate(&spec).unwrap();
    partition(&mut manifest, DEFAULT_PARTITION_RATIOS, seed).unwrap();
    balance_training(&mut manifest, seed).unwrap();
    write_dataset(dir, &records, &manifest).unwrap();
    augment_sampling_rates(&mut manifest, dir, &DEFAULT_TRAIN_RATES, &[250.0, 500.0]).unwrap();
    manifest
}

fn load_sets(
    manifest: &ikrnet::data::DatasetManifest,
    dir: &std::path::Path,
) -> (Vec<LoadedRecord<f32>>, Vec<LoadedRecord<f32>>) {
    (
        load_partition::<f32>(manifest, dir, Partition::Train).unwrap(),
        load_partition::<f32>(manifest, dir, Partition::Validation).unwrap(),
    )
}

#[test]
fn zero_learning_rate_leaves_parameters_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = tiny_dataset(dir.path(), 1);
    let (train_set, val_set) = load_sets(&manifest, dir.path());

    let model = IKrNet::<f32>::build(&IKrNetConfig::toy(), 1).unwrap();
    let before: Vec<Vec<f32>> = model.parameters().iter().map(|p| p.data()).collect();
    let cfg = TrainConfig { epochs: 1, batch_size: 16, lr: 0.0, weight_decay: 0.01, ..Default::default() };
    train(&model, &train_set, &val_set, &cfg, |_| {}).unwrap();
    // Trainable parameters untouched; only batchnorm running buffers moved.
    for (p, orig) in model.parameters().iter().zip(&before) {
        assert_eq!(&p.data(), orig);
    }
}

#[test]
fn same_seed_gives_identical_loss_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = tiny_dataset(dir.path(), 2);
    let (train_set, val_set) = load_sets(&manifest, dir.path());
    let cfg = TrainConfig { epochs: 2, batch_size: 16, seed: 7, ..Default::default() };

    let run = || {
        let model = IKrNet::<f32>::build(&IKrNetConfig::toy(), cfg.seed).unwrap();
        let mut log = Vec::new();
        train(&model, &train_set, &val_set, &cfg, |e| log.push(*e)).unwrap();
        (log, model.parameters().iter().map(|p| p.data()).collect::<Vec<_>>())
    };
    let (log_a, params_a) = run();
    let (log_b, params_b) = run();
    assert_eq!(log_a, log_b, "loss trajectories must be bit-identical");
    assert_eq!(params_a, params_b, "final parameters must be bit-identical");
}

#[test]
fn twenty_patient_toy_run_descends_on_train_and_val() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticProtocolSpec {
        n_patients: 20,
        record_interval_s: 900.0,
        seed: 3,
        ..Default::default()
    };
    let (records, mut manifest) = generate(&spec).unwrap();
    partition(&mut manifest, DEFAULT_PARTITION_RATIOS, 3).unwrap();
    balance_training(&mut manifest, 3).unwrap();
    write_dataset(dir.path(), &records, &manifest).unwrap();
    drop(records);
    augment_sampling_rates(&mut manifest, dir.path(), &DEFAULT_TRAIN_RATES, &[500.0]).unwrap();
    let (train_set, val_set) = load_sets(&manifest, dir.path());

    let cfg = TrainConfig { epochs: 3, batch_size: 32, seed: 3, ..Default::default() };
    let model = IKrNet::<f32>::build(&IKrNetConfig::toy(), 3).unwrap();
    let mut log = Vec::new();
    train(&model, &train_set, &val_set, &cfg, |e| log.push(*e)).unwrap();
    let last = log.last().unwrap();
    assert!(
        last.train_loss < log[0].train_loss,
        "train loss did not descend: {log:?}"
    );
    assert!(last.val_loss < log[0].val_loss, "val loss did not descend: {log:?}");
}

#[test]
fn checkpoint_reload_reproduces_holdout_scores_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = tiny_dataset(dir.path(), 4);
    let (train_set, val_set) = load_sets(&manifest, dir.path());
    let holdout = load_partition::<f32>(&manifest, dir.path(), Partition::Holdout).unwrap();

    let config = IKrNetConfig::toy();
    let model = IKrNet::<f32>::build(&config, 4).unwrap();
    let cfg = TrainConfig { epochs: 1, batch_size: 16, seed: 4, ..Default::default() };
    train(&model, &train_set, &val_set, &cfg, |_| {}).unwrap();

    let ckpt = dir.path().join("model.bin");
    save_checkpoint(&ckpt, &model.named_slots(), &config.hash()).unwrap();
    let original = std::fs::read(&ckpt).unwrap();

    let fresh = IKrNet::<f32>::build(&config, 999).unwrap();
    load_checkpoint(&ckpt, &fresh.named_slots(), &config.hash()).unwrap();

    // Round trip is byte-exact and the predictions coincide bitwise.
    let again = dir.path().join("model2.bin");
    save_checkpoint(&again, &fresh.named_slots(), &config.hash()).unwrap();
    assert_eq!(original, std::fs::read(&again).unwrap());

    let a = predict(&model, &holdout, 16).unwrap();
    let b = predict(&fresh, &holdout, 16).unwrap();
    assert_eq!(a, b);
}
