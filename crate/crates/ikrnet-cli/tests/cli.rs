//! End-to-end command tests against the built binary.

use std::path::Path;
use std::process::{Command, Output};

fn ikrnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ikrnet"))
        .args(args)
        .env("IKRNET_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write_tiny_spec(path: &Path, seed: u64) {
    let spec = serde_json::json!({
        "n_patients": 8,
        "baseline_minutes": 90.0,
        "post_drug_hours": 5.0,
        "stress_windows": [
            { "start_s": -900.0, "end_s": 0.0 },
            { "start_s": 10800.0, "end_s": 11700.0 }
        ],
        "drug_effect": {
            "qt_prolongation_ms": 60.0,
            "hr_reduction_bpm": 12.0,
            "onset_tau_min": 30.0,
            "decay_tau_min": 120.0
        },
        "hr_baseline_bpm": { "mean_bpm": 70.0, "sd_bpm": 6.0 },
        "stress_hr_increase_bpm": 25.0,
        "stress_recovery_tau_min": 12.0,
        "noise_sigma": 0.03,
        "rr_jitter_s_per_bpm": 0.0002,
        "hr_drift_amplitude_bpm": 1.5,
        "hr_drift_period_s": 300.0,
        "record_interval_s": 1500.0,
        "record_duration_s": 10.0,
        "fs": 500.0,
        "st_plus_window_s": 1800.0,
        "seed": seed
    });
    std::fs::write(path, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
}

fn dir_digest(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = walk(root)
        .into_iter()
        .map(|p| {
            let rel = p.strip_prefix(root).unwrap().display().to_string();
            (rel, std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort_by(|a, b| a.0.cmp(&b.0));
    files
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(walk(&path));
        } else {
            out.push(path);
        }
    }
    out
}

#[test]
fn gen_data_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let spec_path = tmp.path().join("spec.json");
    write_tiny_spec(&spec_path, 11);

    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let res = ikrnet(&[
            "gen-data",
            "--config",
            spec_path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    assert_eq!(dir_digest(&tmp.path().join("a")), dir_digest(&tmp.path().join("b")));

    // Zones present in the manifest.
    let manifest = std::fs::read_to_string(tmp.path().join("a/manifest.json")).unwrap();
    assert!(manifest.contains("Baseline"));
    assert!(manifest.contains("StMinusDgPlus"));
}

#[test]
fn invalid_spec_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let spec_path = tmp.path().join("bad.json");
    std::fs::write(&spec_path, r#"{ "n_patients": 0 }"#).unwrap();
    let res = ikrnet(&[
        "gen-data",
        "--config",
        spec_path.to_str().unwrap(),
        "--out",
        tmp.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn augment_multiplies_train_and_is_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    let spec_path = tmp.path().join("spec.json");
    write_tiny_spec(&spec_path, 21);
    let data = tmp.path().join("data");
    assert!(ikrnet(&["gen-data", "--config", spec_path.to_str().unwrap(), "--out", data.to_str().unwrap()])
        .status
        .success());

    let manifest_of = |root: &Path| -> serde_json::Value {
        serde_json::from_str(&std::fs::read_to_string(root.join("manifest.json")).unwrap()).unwrap()
    };
    let count_train = |m: &serde_json::Value| {
        m["entries"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|e| e["partition"] == "Train")
            .count()
    };
    let before = count_train(&manifest_of(&data));

    assert!(ikrnet(&["augment", "--out", data.to_str().unwrap()]).status.success());
    let after = manifest_of(&data);
    assert_eq!(count_train(&after), 3 * before, "default rates triple the train partition");

    // Re-running changes nothing.
    assert!(ikrnet(&["augment", "--out", data.to_str().unwrap()]).status.success());
    assert_eq!(manifest_of(&data), after);
}

#[test]
fn augment_rejects_rates_above_source() {
    let tmp = tempfile::tempdir().unwrap();
    let spec_path = tmp.path().join("spec.json");
    write_tiny_spec(&spec_path, 31);
    let data = tmp.path().join("data");
    assert!(ikrnet(&["gen-data", "--config", spec_path.to_str().unwrap(), "--out", data.to_str().unwrap()])
        .status
        .success());
    let res = ikrnet(&["augment", "--out", data.to_str().unwrap(), "--rates", "600"]);
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn train_eval_report_pipeline_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let spec_path = tmp.path().join("spec.json");
    write_tiny_spec(&spec_path, 41);
    let data = tmp.path().join("data");
    assert!(ikrnet(&["gen-data", "--config", spec_path.to_str().unwrap(), "--out", data.to_str().unwrap()])
        .status
        .success());

    let manifest = data.join("manifest.json");
    let run = tmp.path().join("run");
    let res = ikrnet(&[
        "train",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        run.to_str().unwrap(),
        "--epochs",
        "1",
        "--batch-size",
        "16",
        "--seed",
        "5",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(run.join("checkpoint.bin").exists());
    assert!(run.join("resolved_train.json").exists());
    let log = std::fs::read_to_string(run.join("training_log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 1);
    let first: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert!(first["train_loss"].as_f64().unwrap() > 0.0);

    // Evaluation over the holdout partition.
    let eval_dir = tmp.path().join("eval");
    let res = ikrnet(&[
        "eval",
        "--manifest",
        manifest.to_str().unwrap(),
        "--checkpoint",
        run.join("checkpoint.bin").to_str().unwrap(),
        "--out",
        eval_dir.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(eval_dir.join("eval_report.json")).unwrap())
            .unwrap();
    let n = report["n_records"].as_u64().unwrap();
    assert!(n > 0);
    let zone_total: u64 = report["per_zone"]
        .as_object()
        .unwrap()
        .values()
        .map(|z| z["n"].as_u64().unwrap())
        .sum();
    assert_eq!(zone_total, n, "zone table must cover every record");

    // CSV emission from the report.
    let csv_dir = tmp.path().join("csv");
    let res = ikrnet(&[
        "report",
        "--report",
        eval_dir.join("eval_report.json").to_str().unwrap(),
        "--out",
        csv_dir.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for f in ["per_zone.csv", "per_rate.csv", "threshold_curve.csv"] {
        assert!(csv_dir.join(f).exists(), "{f} missing");
    }
}

#[test]
fn eval_refuses_mismatched_model_config() {
    let tmp = tempfile::tempdir().unwrap();
    let spec_path = tmp.path().join("spec.json");
    write_tiny_spec(&spec_path, 51);
    let data = tmp.path().join("data");
    assert!(ikrnet(&["gen-data", "--config", spec_path.to_str().unwrap(), "--out", data.to_str().unwrap()])
        .status
        .success());
    let manifest = data.join("manifest.json");
    let run = tmp.path().join("run");
    assert!(ikrnet(&[
        "train",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        run.to_str().unwrap(),
        "--epochs",
        "1",
        "--batch-size",
        "16",
    ])
    .status
    .success());

    // A different architecture hash must be refused with the data-integrity
    // exit code.
    let other = tmp.path().join("other_config.json");
    let mut cfg = serde_json::to_value(ikrnet_toy_config()).unwrap();
    cfg["bilstm_hidden"] = serde_json::json!(16);
    std::fs::write(&other, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();

    let res = ikrnet(&[
        "eval",
        "--manifest",
        manifest.to_str().unwrap(),
        "--checkpoint",
        run.join("checkpoint.bin").to_str().unwrap(),
        "--model-config",
        other.to_str().unwrap(),
        "--out",
        tmp.path().join("eval").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
}

fn ikrnet_toy_config() -> ikrnet::model::IKrNetConfig {
    ikrnet::model::IKrNetConfig::toy()
}
