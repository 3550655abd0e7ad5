//! Parameter checkpoints: a JSON header (shapes, seed, epoch) next to a
//! little-endian float32 payload holding `w1, b1, w2, b2` in order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gcn::{GcnParams, HIDDEN_UNITS, IN_FEATURES};
use crate::volume::io::raw_payload_path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub in_features: usize,
    pub hidden_units: usize,
    pub out_features: usize,
    pub seed: u64,
    pub epoch: usize,
}

pub fn save_checkpoint(
    params: &GcnParams,
    seed: u64,
    epoch: usize,
    header_path: &Path,
) -> Result<()> {
    let meta = CheckpointMeta {
        in_features: IN_FEATURES,
        hidden_units: HIDDEN_UNITS,
        out_features: 1,
        seed,
        epoch,
    };
    let mut text = serde_json::to_string_pretty(&meta).expect("meta serialization");
    text.push('\n');
    fs::write(header_path, text).map_err(|source| Error::Io {
        path: header_path.to_path_buf(),
        source,
    })?;

    let raw_path = raw_payload_path(header_path);
    let mut payload = Vec::new();
    for &v in params
        .w1
        .iter()
        .chain(&params.b1)
        .chain(&params.w2)
        .chain(std::iter::once(&params.b2))
    {
        payload.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(&raw_path, payload).map_err(|source| Error::Io {
        path: raw_path,
        source,
    })
}

pub fn load_checkpoint(header_path: &Path) -> Result<(GcnParams, CheckpointMeta)> {
    let text = fs::read_to_string(header_path).map_err(|source| Error::Io {
        path: header_path.to_path_buf(),
        source,
    })?;
    let meta: CheckpointMeta = serde_json::from_str(&text).map_err(|e| Error::InvalidHeader {
        path: header_path.to_path_buf(),
        reason: e.to_string(),
    })?;
    if meta.in_features != IN_FEATURES
        || meta.hidden_units != HIDDEN_UNITS
        || meta.out_features != 1
    {
        return Err(Error::InvalidHeader {
            path: header_path.to_path_buf(),
            reason: format!(
                "unsupported shapes {}x{}x{}",
                meta.in_features, meta.hidden_units, meta.out_features
            ),
        });
    }

    let raw_path = raw_payload_path(header_path);
    let bytes = fs::read(&raw_path).map_err(|source| Error::Io {
        path: raw_path.clone(),
        source,
    })?;
    let count = IN_FEATURES * HIDDEN_UNITS + HIDDEN_UNITS + HIDDEN_UNITS + 1;
    if bytes.len() != count * 4 {
        return Err(Error::PayloadSize {
            path: raw_path,
            expected: count * 4,
            found: bytes.len(),
        });
    }
    let mut values = Vec::with_capacity(count);
    for (i, c) in bytes.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
        if !v.is_finite() {
            return Err(Error::NonFinitePayload {
                path: raw_path,
                index: i,
            });
        }
        values.push(v as f64);
    }
    let (w1, rest) = values.split_at(IN_FEATURES * HIDDEN_UNITS);
    let (b1, rest) = rest.split_at(HIDDEN_UNITS);
    let (w2, b2) = rest.split_at(HIDDEN_UNITS);
    Ok((
        GcnParams {
            w1: w1.to_vec(),
            b1: b1.to_vec(),
            w2: w2.to_vec(),
            b2: b2[0],
        },
        meta,
    ))
}
