//! Command-line surface: dataset generation, augmentation, training,
//! evaluation, and report emission.
//!
//! Exit codes: 0 success, 2 user/config error, 3 data-integrity error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ikrnet::data::{
    augment_sampling_rates, prepare_dataset, DatasetManifest, Partition, SyntheticProtocolSpec,
    DEFAULT_HOLDOUT_RATES, DEFAULT_TRAIN_RATES,
};
use ikrnet::error::{DataError, TrainError};
use ikrnet::eval::{build_report, write_report_csv, EvalReport};
use ikrnet::model::{IKrNet, IKrNetConfig};
use ikrnet::nn::checkpoint::{load_checkpoint, save_checkpoint};
use ikrnet::train::{load_partition, predict, train, TrainConfig};

#[derive(Parser)]
#[command(name = "ikrnet", version, about = "Drug-footprint ECG pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset: records, sidecars, and manifest.
    GenData {
        /// Generator spec JSON; defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dataset root directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the spec's patient count.
        #[arg(long)]
        patients: Option<usize>,
    },
    /// Add sampling-rate augmented copies to an existing dataset.
    Augment {
        /// Dataset root containing manifest.json.
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated rates for train/validation/evaluation (default 180,250).
        #[arg(long)]
        rates: Option<String>,
        /// Comma-separated holdout fan-out rates
        /// (default 150,180,215,250,300,350,425,500).
        #[arg(long)]
        holdout_rates: Option<String>,
    },
    /// Train a model on a dataset's train/validation partitions.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        /// Model config JSON; the toy config when omitted.
        #[arg(long)]
        model_config: Option<PathBuf>,
        /// Use the full-size default architecture instead of the toy config.
        #[arg(long)]
        full: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        weight_decay: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Resume from an existing checkpoint (config hash must match).
        #[arg(long)]
        init_from: Option<PathBuf>,
    },
    /// Run a checkpoint over the holdout partition and emit the report.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Model config JSON; the toy config when omitted.
        #[arg(long)]
        model_config: Option<PathBuf>,
        /// Use the full-size default architecture instead of the toy config.
        #[arg(long)]
        full: bool,
        #[arg(long)]
        out: PathBuf,
        /// Partition to evaluate (train|validation|evaluation|holdout).
        #[arg(long)]
        partition: Option<String>,
    },
    /// Emit CSV tables from an evaluation report JSON.
    Report {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// User/config errors exit 2; data-integrity and IO errors exit 3.
enum CmdError {
    Config(String),
    Data(String),
}

impl CmdError {
    fn exit_code(&self) -> u8 {
        match self {
            CmdError::Config(_) => 2,
            CmdError::Data(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CmdError::Config(m) | CmdError::Data(m) => m,
        }
    }
}

impl From<DataError> for CmdError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Config(_) | DataError::InvalidArgument(_) => CmdError::Config(e.to_string()),
            _ => CmdError::Data(e.to_string()),
        }
    }
}

impl From<TrainError> for CmdError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Setup(_) | TrainError::Model(_) | TrainError::Nn(_) => {
                CmdError::Config(e.to_string())
            }
            TrainError::Data(d) => d.into(),
            _ => CmdError::Data(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

/// `IKRNET_THREADS` caps worker parallelism for generation, loading, and
/// sharded inference.
fn init_thread_pool() {
    if let Ok(v) = std::env::var("IKRNET_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        } else {
            eprintln!("warning: ignoring non-numeric IKRNET_THREADS={v}");
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, CmdError> {
    let body = fs::read_to_string(path)
        .map_err(|e| CmdError::Data(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&body)
        .map_err(|e| CmdError::Config(format!("malformed {what} {}: {e}", path.display())))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CmdError> {
    let body = serde_json::to_string_pretty(value).expect("value serializes");
    fs::write(path, body).map_err(|e| CmdError::Data(format!("cannot write {}: {e}", path.display())))
}

fn ensure_dir(path: &Path) -> Result<(), CmdError> {
    fs::create_dir_all(path)
        .map_err(|e| CmdError::Data(format!("cannot create {}: {e}", path.display())))
}

fn parse_rates(csv: &str) -> Result<Vec<f64>, CmdError> {
    csv.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CmdError::Config(format!("bad rate {s:?} in rate list")))
        })
        .collect()
}

fn load_model_config(path: Option<&Path>, full: bool) -> Result<IKrNetConfig, CmdError> {
    let config = match (path, full) {
        (Some(p), _) => read_json(p, "model config")?,
        (None, true) => IKrNetConfig::paper_default(),
        (None, false) => IKrNetConfig::toy(),
    };
    config.validate().map_err(|e| CmdError::Config(e.to_string()))?;
    Ok(config)
}

fn parse_partition(name: Option<&str>) -> Result<Partition, CmdError> {
    match name.unwrap_or("holdout") {
        "train" => Ok(Partition::Train),
        "validation" => Ok(Partition::Validation),
        "evaluation" => Ok(Partition::Evaluation),
        "holdout" => Ok(Partition::Holdout),
        other => Err(CmdError::Config(format!("unknown partition {other:?}"))),
    }
}

fn run(command: Command) -> Result<(), CmdError> {
    match command {
        Command::GenData { config, out, seed, patients } => {
            let mut spec: SyntheticProtocolSpec = match config {
                Some(p) => read_json(&p, "generator spec")?,
                None => SyntheticProtocolSpec::default(),
            };
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            if let Some(n) = patients {
                spec.n_patients = n;
            }
            spec.validate().map_err(CmdError::from)?;
            ensure_dir(&out)?;
            let manifest = prepare_dataset(&spec, &out)?;
            write_json(&out.join("resolved_spec.json"), &spec)?;
            println!(
                "generated {} records for {} patients under {}",
                manifest.entries.len(),
                spec.n_patients,
                out.display()
            );
            Ok(())
        }

        Command::Augment { out, rates, holdout_rates } => {
            let train_rates = match rates {
                Some(csv) => parse_rates(&csv)?,
                None => DEFAULT_TRAIN_RATES.to_vec(),
            };
            let hold_rates = match holdout_rates {
                Some(csv) => parse_rates(&csv)?,
                None => DEFAULT_HOLDOUT_RATES.to_vec(),
            };
            let manifest_path = out.join("manifest.json");
            let mut manifest = DatasetManifest::load(&manifest_path)?;
            let before = manifest.entries.len();
            augment_sampling_rates(&mut manifest, &out, &train_rates, &hold_rates)?;
            manifest.save(&manifest_path)?;
            write_json(
                &out.join("resolved_augment.json"),
                &serde_json::json!({ "rates": train_rates, "holdout_rates": hold_rates }),
            )?;
            println!("augmented: {} -> {} records", before, manifest.entries.len());
            Ok(())
        }

        Command::Train {
            manifest,
            model_config,
            full,
            out,
            epochs,
            batch_size,
            lr,
            weight_decay,
            seed,
            init_from,
        } => {
            let config = load_model_config(model_config.as_deref(), full)?;
            let mut train_cfg = TrainConfig::default();
            if let Some(v) = epochs {
                train_cfg.epochs = v;
            }
            if let Some(v) = batch_size {
                train_cfg.batch_size = v;
            }
            if let Some(v) = lr {
                train_cfg.lr = v;
            }
            if let Some(v) = weight_decay {
                train_cfg.weight_decay = v;
            }
            if let Some(v) = seed {
                train_cfg.seed = v;
            }
            ensure_dir(&out)?;

            let root = manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
            let index = DatasetManifest::load(&manifest)?;
            index.assert_patient_disjoint()?;
            let train_set = load_partition::<f32>(&index, &root, Partition::Train)?;
            let val_set = load_partition::<f32>(&index, &root, Partition::Validation)?;

            let model = IKrNet::<f32>::build(&config, train_cfg.seed)
                .map_err(|e| CmdError::Config(e.to_string()))?;
            if let Some(ckpt) = &init_from {
                load_checkpoint(ckpt, &model.named_slots(), &config.hash()).map_err(CmdError::from)?;
            }

            write_json(
                &out.join("resolved_train.json"),
                &serde_json::json!({
                    "manifest": manifest.display().to_string(),
                    "model_config": config,
                    "train_config": train_cfg,
                }),
            )?;

            let log_path = out.join("training_log.jsonl");
            let mut log_file = fs::File::create(&log_path)
                .map_err(|e| CmdError::Data(format!("cannot create {}: {e}", log_path.display())))?;
            let outcome = train(&model, &train_set, &val_set, &train_cfg, |entry| {
                use std::io::Write;
                let line = serde_json::to_string(entry).expect("log entry serializes");
                let _ = writeln!(log_file, "{line}");
                println!(
                    "epoch {} train_loss {:.6} val_loss {:.6}",
                    entry.epoch, entry.train_loss, entry.val_loss
                );
            })
            .map_err(CmdError::from)?;

            let ckpt_path = out.join("checkpoint.bin");
            save_checkpoint(&ckpt_path, &model.named_slots(), &config.hash()).map_err(CmdError::from)?;
            println!(
                "saved best-validation checkpoint (epoch {}, val loss {:.6}) to {}",
                outcome.best_epoch,
                outcome.best_val_loss,
                ckpt_path.display()
            );
            Ok(())
        }

        Command::Eval { manifest, checkpoint, model_config, full, out, partition } => {
            let config = load_model_config(model_config.as_deref(), full)?;
            let part = parse_partition(partition.as_deref())?;
            ensure_dir(&out)?;

            let root = manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
            let index = DatasetManifest::load(&manifest)?;
            let records = load_partition::<f32>(&index, &root, part)?;
            if records.is_empty() {
                return Err(CmdError::Config(format!("partition {part:?} is empty")));
            }

            let model = IKrNet::<f32>::build(&config, 0).map_err(|e| CmdError::Config(e.to_string()))?;
            load_checkpoint(&checkpoint, &model.named_slots(), &config.hash()).map_err(CmdError::from)?;

            let preds = predict(&model, &records, 64).map_err(CmdError::from)?;
            let report = build_report(&preds).map_err(|e| CmdError::Config(e.to_string()))?;

            write_json(
                &out.join("resolved_eval.json"),
                &serde_json::json!({
                    "manifest": manifest.display().to_string(),
                    "checkpoint": checkpoint.display().to_string(),
                    "model_config": config,
                    "partition": format!("{part:?}"),
                }),
            )?;
            write_json(&out.join("eval_report.json"), &report)?;
            println!(
                "evaluated {} records: accuracy {:.4}",
                report.n_records, report.overall.accuracy
            );
            Ok(())
        }

        Command::Report { report, out } => {
            let parsed: EvalReport = read_json(&report, "eval report")?;
            ensure_dir(&out)?;
            write_report_csv(&parsed, &out)?;
            println!("wrote per_zone.csv, per_rate.csv, threshold_curve.csv to {}", out.display());
            Ok(())
        }
    }
}
