//! Directional check: does sampling-rate augmentation narrow the accuracy
//! spread across holdout rates? One line per seed.
//!
//! Usage: augmentation_benefit [n_seeds] [n_patients] [interval_s] [epochs]

use ikrnet::data::{
    augment_sampling_rates, balance_training, generate, partition, write_dataset, Partition,
    SyntheticProtocolSpec, DEFAULT_HOLDOUT_RATES, DEFAULT_PARTITION_RATIOS, DEFAULT_TRAIN_RATES,
};
use ikrnet::eval::build_report;
use ikrnet::model::{IKrNet, IKrNetConfig};
use ikrnet::train::{load_partition, predict, train, TrainConfig};

fn rate_spread(seed: u64, n_patients: usize, interval: f64, epochs: usize, augment: bool) -> f64 {
    let spec = SyntheticProtocolSpec {
        n_patients,
        record_interval_s: interval,
        seed,
        ..Default::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let (records, mut manifest) = generate(&spec).unwrap();
    partition(&mut manifest, DEFAULT_PARTITION_RATIOS, seed).unwrap();
    balance_training(&mut manifest, seed).unwrap();
    write_dataset(dir.path(), &records, &manifest).unwrap();
    drop(records);
    let train_rates: &[f64] = if augment { &DEFAULT_TRAIN_RATES } else { &[] };
    augment_sampling_rates(&mut manifest, dir.path(), train_rates, &DEFAULT_HOLDOUT_RATES).unwrap();

    let train_set = load_partition::<f32>(&manifest, dir.path(), Partition::Train).unwrap();
    let val_set = load_partition::<f32>(&manifest, dir.path(), Partition::Validation).unwrap();
    let holdout = load_partition::<f32>(&manifest, dir.path(), Partition::Holdout).unwrap();

    let cfg = TrainConfig { epochs, batch_size: 32, seed, ..Default::default() };
    let model = IKrNet::<f32>::build(&IKrNetConfig::toy(), seed).unwrap();
    train(&model, &train_set, &val_set, &cfg, |_| {}).unwrap();

    let report = build_report(&predict(&model, &holdout, 32).unwrap()).unwrap();
    let accs: Vec<f64> = report.per_rate.values().map(|z| z.accuracy).collect();
    let max = accs.iter().cloned().fold(f64::MIN, f64::max);
    let min = accs.iter().cloned().fold(f64::MAX, f64::min);
    max - min
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let arg = |i: usize, default: f64| -> f64 {
        args.get(i).and_then(|s| s.parse().ok()).unwrap_or(default)
    };
    let n_seeds = arg(1, 5.0) as u64;
    let n_patients = arg(2, 20.0) as usize;
    let interval = arg(3, 600.0);
    let epochs = arg(4, 4.0) as usize;

    let mut wins = 0;
    for seed in 0..n_seeds {
        let t = std::time::Instant::now();
        let with = rate_spread(seed, n_patients, interval, epochs, true);
        let without = rate_spread(seed, n_patients, interval, epochs, false);
        let win = with <= without;
        wins += u32::from(win);
        println!(
            "seed {seed}: spread with {with:.4} vs without {without:.4} -> {} ({:.0} s)",
            if win { "narrower-or-equal" } else { "wider" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("{wins}/{n_seeds} seeds favor augmentation");
}
