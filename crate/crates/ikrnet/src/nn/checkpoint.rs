//! Checkpoint file: a JSON header (names, shapes, dtype, config hash)
//! followed by raw little-endian value buffers in header order.
//!
//! Layout: `u64 LE header length | header JSON | buffers`. Reload is
//! byte-exact: saving a freshly loaded checkpoint reproduces the file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::TrainError;
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

/// A named tensor slot: trainable parameter or persistent buffer
/// (e.g. batchnorm running statistics).
pub struct NamedTensor<S: Scalar> {
    pub name: String,
    pub tensor: Tensor<S>,
    pub trainable: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct HeaderEntry {
    name: String,
    shape: Vec<usize>,
    trainable: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    dtype: String,
    config_hash: String,
    entries: Vec<HeaderEntry>,
}

pub fn save_checkpoint<S: Scalar>(
    path: &Path,
    slots: &[NamedTensor<S>],
    config_hash: &str,
) -> Result<(), TrainError> {
    let header = Header {
        dtype: S::DTYPE.to_string(),
        config_hash: config_hash.to_string(),
        entries: slots
            .iter()
            .map(|s| HeaderEntry {
                name: s.name.clone(),
                shape: s.tensor.shape().to_vec(),
                trainable: s.trainable,
            })
            .collect(),
    };
    let header_json = serde_json::to_vec(&header)
        .map_err(|e| TrainError::MalformedCheckpoint(e.to_string()))?;

    let total: usize = slots.iter().map(|s| s.tensor.len() * S::BYTE_WIDTH).sum();
    let mut out = Vec::with_capacity(8 + header_json.len() + total);
    out.extend_from_slice(&(header_json.len() as u64).to_le_bytes());
    out.extend_from_slice(&header_json);
    for s in slots {
        s.tensor.with_data(|d| {
            for v in d {
                v.write_le(&mut out);
            }
        });
    }
    fs::write(path, out).map_err(|e| TrainError::Io { path: path.display().to_string(), source: e })
}

/// Header-only peek, for hash checks before committing to a full load.
pub fn checkpoint_config_hash(path: &Path) -> Result<String, TrainError> {
    let bytes = fs::read(path)
        .map_err(|e| TrainError::Io { path: path.display().to_string(), source: e })?;
    let header = parse_header(&bytes)?.0;
    Ok(header.config_hash)
}

fn parse_header(bytes: &[u8]) -> Result<(Header, usize), TrainError> {
    if bytes.len() < 8 {
        return Err(TrainError::MalformedCheckpoint("file shorter than length prefix".into()));
    }
    let len = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
    if bytes.len() < 8 + len {
        return Err(TrainError::MalformedCheckpoint("truncated header".into()));
    }
    let header: Header = serde_json::from_slice(&bytes[8..8 + len])
        .map_err(|e| TrainError::MalformedCheckpoint(e.to_string()))?;
    Ok((header, 8 + len))
}

/// Loads buffer values into an existing slot list (names, shapes, and dtype
/// must match exactly) after verifying the config hash.
pub fn load_checkpoint<S: Scalar>(
    path: &Path,
    slots: &[NamedTensor<S>],
    expected_config_hash: &str,
) -> Result<(), TrainError> {
    let bytes = fs::read(path)
        .map_err(|e| TrainError::Io { path: path.display().to_string(), source: e })?;
    let (header, mut offset) = parse_header(&bytes)?;
    if header.config_hash != expected_config_hash {
        return Err(TrainError::ConfigHashMismatch {
            expected: expected_config_hash.to_string(),
            found: header.config_hash,
        });
    }
    if header.dtype != S::DTYPE {
        return Err(TrainError::MalformedCheckpoint(format!(
            "dtype {} does not match model dtype {}",
            header.dtype,
            S::DTYPE
        )));
    }
    if header.entries.len() != slots.len() {
        return Err(TrainError::MalformedCheckpoint(format!(
            "checkpoint has {} entries, model has {}",
            header.entries.len(),
            slots.len()
        )));
    }
    for (entry, slot) in header.entries.iter().zip(slots) {
        if entry.name != slot.name || entry.shape != slot.tensor.shape() {
            return Err(TrainError::MalformedCheckpoint(format!(
                "entry {} {:?} does not match slot {} {:?}",
                entry.name,
                entry.shape,
                slot.name,
                slot.tensor.shape()
            )));
        }
        let n = slot.tensor.len();
        let needed = n * S::BYTE_WIDTH;
        if bytes.len() < offset + needed {
            return Err(TrainError::MalformedCheckpoint("truncated buffer section".into()));
        }
        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            values.push(S::read_le(&bytes[offset + i * S::BYTE_WIDTH..]));
        }
        slot.tensor.set_data(&values);
        offset += needed;
    }
    if offset != bytes.len() {
        return Err(TrainError::MalformedCheckpoint("trailing bytes after buffers".into()));
    }
    Ok(())
}
