//! On-disk record format: a `n,amplitude` CSV per signal plus a JSON sidecar
//! carrying identity, provenance, and generator ground truth.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::DataError;
use crate::signal::{EcgRecord, Label, ProtocolZone};

/// Sidecar metadata stored next to each record CSV.
///
/// Serialization must round-trip these fields exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSidecar {
    pub record_id: String,
    pub patient_id: String,
    pub fs: f64,
    pub source_fs: f64,
    pub label: Option<Label>,
    pub zone: Option<ProtocolZone>,
    /// Onset time of each generator beat, seconds from record start.
    pub beat_onsets_s: Vec<f64>,
}

/// Writes `record` as `<stem>.csv` + `<stem>.json` under `dir`.
pub fn write_record(
    dir: &Path,
    record: &EcgRecord,
    beat_onsets_s: &[f64],
) -> Result<(), DataError> {
    let csv_path = dir.join(format!("{}.csv", record.record_id));
    let mut csv = String::with_capacity(record.len() * 12 + 16);
    csv.push_str("n,amplitude\n");
    for (n, v) in record.samples.iter().enumerate() {
        csv.push_str(&format!("{n},{v}\n"));
    }
    fs::write(&csv_path, csv).map_err(|e| DataError::io(csv_path.display().to_string(), e))?;

    let sidecar = RecordSidecar {
        record_id: record.record_id.clone(),
        patient_id: record.patient_id.clone(),
        fs: record.fs,
        source_fs: record.source_fs,
        label: record.label,
        zone: record.zone,
        beat_onsets_s: beat_onsets_s.to_vec(),
    };
    let json_path = dir.join(format!("{}.json", record.record_id));
    let body = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| DataError::Malformed { what: "sidecar", path: json_path.display().to_string(), msg: e.to_string() })?;
    fs::write(&json_path, body).map_err(|e| DataError::io(json_path.display().to_string(), e))
}

/// Loads a record from its CSV path; the sidecar is expected at the same stem.
pub fn read_record(csv_path: &Path) -> Result<(EcgRecord, RecordSidecar), DataError> {
    let sidecar_path = csv_path.with_extension("json");
    let sidecar: RecordSidecar = serde_json::from_str(
        &fs::read_to_string(&sidecar_path)
            .map_err(|e| DataError::io(sidecar_path.display().to_string(), e))?,
    )
    .map_err(|e| DataError::Malformed {
        what: "sidecar",
        path: sidecar_path.display().to_string(),
        msg: e.to_string(),
    })?;

    let body = fs::read_to_string(csv_path)
        .map_err(|e| DataError::io(csv_path.display().to_string(), e))?;
    let mut lines = body.lines();
    match lines.next() {
        Some("n,amplitude") => {}
        other => {
            return Err(DataError::Malformed {
                what: "record csv",
                path: csv_path.display().to_string(),
                msg: format!("bad header {other:?}"),
            })
        }
    }
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let amp = line
            .split_once(',')
            .and_then(|(_, v)| v.parse::<f64>().ok())
            .ok_or_else(|| DataError::Malformed {
                what: "record csv",
                path: csv_path.display().to_string(),
                msg: format!("bad row {} at line {}", line, i + 2),
            })?;
        samples.push(amp);
    }
    if samples.is_empty() {
        return Err(DataError::Malformed {
            what: "record csv",
            path: csv_path.display().to_string(),
            msg: "no samples".into(),
        });
    }

    let record = EcgRecord {
        record_id: sidecar.record_id.clone(),
        patient_id: sidecar.patient_id.clone(),
        samples,
        fs: sidecar.fs,
        source_fs: sidecar.source_fs,
        label: sidecar.label,
        zone: sidecar.zone,
    };
    Ok((record, sidecar))
}
