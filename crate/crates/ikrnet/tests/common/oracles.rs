//! Brute-force metric oracles: naive loops and exhaustive enumeration,
//! structurally independent of the evaluation module.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use ikrnet::eval::{PredictionEntry, PredictionSet};
use ikrnet::signal::{Label, ProtocolZone};

pub const ZONES: [ProtocolZone; 4] = [
    ProtocolZone::Baseline,
    ProtocolZone::StMinusDgPlus,
    ProtocolZone::StPlusDgPlus,
    ProtocolZone::Unassigned,
];
pub const RATES: [f64; 3] = [150.0, 250.0, 500.0];

pub fn random_set(seed: u64, min_len: usize) -> PredictionSet {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n = rng.random_range(min_len..min_len + 40);
    let n_patients = rng.random_range(1..6);
    let entries = (0..n)
        .map(|i| {
            let truth = if rng.random_bool(0.5) { Label::SotPlus } else { Label::SotMinus };
            let pred = if rng.random_bool(0.75) { truth } else { flip(truth) };
            PredictionEntry {
                record_id: format!("r{i}"),
                patient_id: format!("p{}", rng.random_range(0..n_patients)),
                zone: ZONES[rng.random_range(0..ZONES.len())],
                source_fs: RATES[rng.random_range(0..RATES.len())],
                true_label: truth,
                predicted_label: pred,
                score: rng.random_range(0.0..1.0),
                // Coarse grid so ties between heart rates actually occur.
                average_bpm: Some(50.0 + 5.0 * rng.random_range(0..12) as f64),
            }
        })
        .collect();
    PredictionSet::new(entries)
}

pub fn flip(l: Label) -> Label {
    match l {
        Label::SotPlus => Label::SotMinus,
        Label::SotMinus => Label::SotPlus,
    }
}

pub fn oracle_basic(preds: &PredictionSet) -> (f64, Option<f64>, Option<f64>, Option<f64>) {
    let (mut tp, mut fp, mut tn, mut fne) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for e in &preds.entries {
        let pos_pred = e.predicted_label == Label::SotPlus;
        let pos_true = e.true_label == Label::SotPlus;
        match (pos_pred, pos_true) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, false) => tn += 1.0,
            (false, true) => fne += 1.0,
        }
    }
    let acc = (tp + tn) / preds.entries.len() as f64;
    let prec = if tp + fp > 0.0 { Some(tp / (tp + fp)) } else { None };
    let rec = if tp + fne > 0.0 { Some(tp / (tp + fne)) } else { None };
    let f1 = match (prec, rec) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    (acc, prec, rec, f1)
}

pub fn oracle_group_acc(preds: &PredictionSet, by_zone: bool) -> BTreeMap<String, f64> {
    let mut groups: BTreeMap<String, Vec<bool>> = BTreeMap::new();
    for e in &preds.entries {
        let key = if by_zone {
            if e.zone == ProtocolZone::Unassigned {
                continue;
            }
            e.zone.to_string()
        } else {
            format!("{}", e.source_fs)
        };
        groups.entry(key).or_default().push(e.true_label == e.predicted_label);
    }
    groups
        .into_iter()
        .map(|(k, v)| {
            let correct = v.iter().filter(|c| **c).count() as f64;
            (k, correct / v.len() as f64)
        })
        .collect()
}

pub fn oracle_apd(preds: &PredictionSet, by_zone: bool) -> Option<f64> {
    let accs = oracle_group_acc(preds, by_zone);
    if accs.len() < 2 {
        return None;
    }
    let max = accs.values().cloned().fold(f64::MIN, f64::max);
    let min = accs.values().cloned().fold(f64::MAX, f64::min);
    Some((max - min).abs())
}

/// Youden threshold by exhaustive search: every observed HR value is tried
/// as "predict error when hr >= t"; the lowest threshold among maxima wins.
pub fn oracle_youden(rows: &[(bool, f64)]) -> Option<(f64, f64)> {
    let errors = rows.iter().filter(|(m, _)| *m).count();
    let oks = rows.len() - errors;
    if errors == 0 || oks == 0 {
        return None;
    }
    let mut thresholds: Vec<f64> = rows.iter().map(|(_, h)| *h).collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();
    let mut best: Option<(f64, f64)> = None;
    for &t in &thresholds {
        let tp = rows.iter().filter(|(m, h)| *m && *h >= t).count() as f64;
        let fp = rows.iter().filter(|(m, h)| !*m && *h >= t).count() as f64;
        let j = tp / errors as f64 - fp / oks as f64;
        let better = match best {
            None => true,
            Some((bj, bt)) => j > bj || (j == bj && t < bt),
        };
        if better {
            best = Some((j, t));
        }
    }
    best.map(|(j, t)| (t, j))
}
