//! Native volume format: a `<name>.json` header next to a `<name>.raw`
//! payload of IEEE-754 32-bit little-endian floats in x-fastest order.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Volume3, VolumeKind};

#[derive(Debug, Serialize, Deserialize)]
struct VolumeHeader {
    dims: [usize; 3],
    spacing: [f64; 3],
    dtype: String,
    order: String,
    kind: String,
}

/// Payload path for a given header path: same stem, `.raw` extension.
pub fn raw_payload_path(header_path: &Path) -> PathBuf {
    header_path.with_extension("raw")
}

/// Writes `v` as a header/payload pair. `header_path` names the `.json`
/// header; the payload goes to the sibling `.raw` file. Values are narrowed
/// to f32, the precision of the format.
pub fn save_volume(v: &Volume3, header_path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: header_path.to_path_buf(),
        source,
    };
    let (nx, ny, nz) = v.dims();
    let (sx, sy, sz) = v.spacing();
    let header = VolumeHeader {
        dims: [nx, ny, nz],
        spacing: [sx, sy, sz],
        dtype: "f32".to_string(),
        order: "x-fastest".to_string(),
        kind: v.kind().as_str().to_string(),
    };
    let mut text = serde_json::to_string_pretty(&header).expect("header serialization");
    text.push('\n');
    fs::write(header_path, text).map_err(io_err)?;

    let raw_path = raw_payload_path(header_path);
    let mut payload = Vec::with_capacity(v.voxel_count() * 4);
    for &val in v.data() {
        payload.extend_from_slice(&(val as f32).to_le_bytes());
    }
    let mut file = fs::File::create(&raw_path).map_err(|source| Error::Io {
        path: raw_path.clone(),
        source,
    })?;
    file.write_all(&payload).map_err(|source| Error::Io {
        path: raw_path.clone(),
        source,
    })?;
    Ok(())
}

/// Reads a header/payload pair written by [`save_volume`]. Values come back
/// little-endian with no reordering; the result satisfies every [`Volume3`]
/// invariant or an error is returned.
pub fn load_volume(header_path: &Path) -> Result<Volume3> {
    let text = fs::read_to_string(header_path).map_err(|source| Error::Io {
        path: header_path.to_path_buf(),
        source,
    })?;
    let header: VolumeHeader = serde_json::from_str(&text).map_err(|e| Error::InvalidHeader {
        path: header_path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let invalid = |reason: String| Error::InvalidHeader {
        path: header_path.to_path_buf(),
        reason,
    };
    if header.dtype != "f32" {
        return Err(invalid(format!("unsupported dtype {:?}", header.dtype)));
    }
    if header.order != "x-fastest" {
        return Err(invalid(format!("unsupported order {:?}", header.order)));
    }
    let kind = VolumeKind::parse(&header.kind)
        .ok_or_else(|| invalid(format!("unknown kind {:?}", header.kind)))?;
    let [nx, ny, nz] = header.dims;

    let raw_path = raw_payload_path(header_path);
    let bytes = fs::read(&raw_path).map_err(|source| Error::Io {
        path: raw_path.clone(),
        source,
    })?;
    let expected = nx
        .checked_mul(ny)
        .and_then(|v| v.checked_mul(nz))
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| invalid("dimensions overflow".to_string()))?;
    if bytes.len() != expected {
        return Err(Error::PayloadSize {
            path: raw_path,
            expected,
            found: bytes.len(),
        });
    }
    let mut data = Vec::with_capacity(expected / 4);
    for (i, chunk) in bytes.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        if !v.is_finite() {
            return Err(Error::NonFinitePayload {
                path: raw_path,
                index: i,
            });
        }
        data.push(v as f64);
    }
    Volume3::new(
        (nx, ny, nz),
        (header.spacing[0], header.spacing[1], header.spacing[2]),
        kind,
        data,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vol.json");
        let data: Vec<f64> = (0..8).map(|i| (i as f32 * 0.125) as f64).collect();
        let v = Volume3::new((2, 2, 2), (1.0, 0.5, 2.0), VolumeKind::Probability, data).unwrap();
        save_volume(&v, &path).unwrap();
        let back = load_volume(&path).unwrap();
        assert_eq!(back.dims(), v.dims());
        assert_eq!(back.spacing(), v.spacing());
        assert_eq!(back.kind(), v.kind());
        for (a, b) in back.data().iter().zip(v.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn payload_size_mismatch_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vol.json");
        let v = Volume3::filled((2, 2, 2), (1.0, 1.0, 1.0), VolumeKind::Intensity, 0.0).unwrap();
        save_volume(&v, &path).unwrap();
        // Truncate to 7 floats for an 8-voxel header.
        std::fs::write(raw_payload_path(&path), vec![0u8; 28]).unwrap();
        assert!(matches!(
            load_volume(&path),
            Err(Error::PayloadSize {
                expected: 32,
                found: 28,
                ..
            })
        ));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        assert!(matches!(
            load_volume(Path::new("/nonexistent/vol.json")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn invalid_kind_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vol.json");
        let v = Volume3::filled((1, 1, 1), (1.0, 1.0, 1.0), VolumeKind::Mask, 1.0).unwrap();
        save_volume(&v, &path).unwrap();
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("mask", "labels");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            load_volume(&path),
            Err(Error::InvalidHeader { .. })
        ));
    }

    #[test]
    fn nan_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vol.json");
        let v = Volume3::filled((1, 1, 1), (1.0, 1.0, 1.0), VolumeKind::Intensity, 0.0).unwrap();
        save_volume(&v, &path).unwrap();
        std::fs::write(raw_payload_path(&path), f32::NAN.to_le_bytes()).unwrap();
        assert!(matches!(
            load_volume(&path),
            Err(Error::NonFinitePayload { index: 0, .. })
        ));
    }

    #[test]
    fn half_probability_payload_encoding() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vol.json");
        let v = Volume3::filled((1, 1, 1), (1.0, 1.0, 1.0), VolumeKind::Probability, 0.5).unwrap();
        save_volume(&v, &path).unwrap();
        let bytes = std::fs::read(raw_payload_path(&path)).unwrap();
        assert_eq!(bytes, vec![0x00, 0x00, 0x00, 0x3F]);
    }

    #[test]
    fn mask_payload_holds_only_binary_patterns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vol.json");
        let v = Volume3::mask_from_bits((2, 2, 1), (1.0, 1.0, 1.0), &[true, false, true, true]);
        save_volume(&v, &path).unwrap();
        let bytes = std::fs::read(raw_payload_path(&path)).unwrap();
        let zero = 0.0f32.to_le_bytes();
        let one = 1.0f32.to_le_bytes();
        for chunk in bytes.chunks_exact(4) {
            assert!(chunk == zero || chunk == one);
        }
    }
}
