//! RAWF: little-endian `f32` payload (`<name>.raw`) plus a JSON sidecar
//! (`<name>.json`) carrying shape, spacing, angles and the payload SHA-256.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BinaryMask, ImageGrid, Sinogram};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const RAWF_FORMAT: &str = "RAWF";
pub const RAWF_DTYPE: &str = "f32le";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RawKind {
    Image,
    Sinogram,
    Mask,
}

/// JSON sidecar. For sinograms `width` is the detector count and `height`
/// the view count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub kind: RawKind,
    pub dtype: String,
    pub width: usize,
    pub height: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector_spacing_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles_rad: Option<Vec<f64>>,
    pub checksum_sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn payload_path(path: &Path) -> PathBuf {
    path.with_extension("raw")
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn encode<T: Real>(values: impl Iterator<Item = T>) -> Vec<u8> {
    let mut out = Vec::new();
    for v in values {
        out.extend_from_slice(&v.to_f32().unwrap_or(f32::NAN).to_le_bytes());
    }
    out
}

fn write_pair(path: &Path, payload: &[u8], mut sidecar: Sidecar) -> Result<String> {
    let checksum = sha256_hex(payload);
    sidecar.checksum_sha256 = checksum.clone();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let raw = payload_path(path);
    fs::write(&raw, payload).map_err(|e| Error::io(&raw, e))?;
    let json = sidecar_path(path);
    let mut text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    text.push('\n');
    fs::write(&json, text).map_err(|e| Error::io(&json, e))?;
    Ok(checksum)
}

fn read_pair(path: &Path, kind: RawKind) -> Result<(Sidecar, Vec<f32>)> {
    let json = sidecar_path(path);
    let text = fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
    let format_err = |msg: String| Error::Format {
        path: json.clone(),
        msg,
    };
    let sidecar: Sidecar =
        serde_json::from_str(&text).map_err(|e| format_err(format!("bad sidecar: {e}")))?;
    if sidecar.format != RAWF_FORMAT {
        return Err(format_err(format!("unknown format {:?}", sidecar.format)));
    }
    if sidecar.dtype != RAWF_DTYPE {
        return Err(format_err(format!("unsupported dtype {:?}", sidecar.dtype)));
    }
    if sidecar.kind != kind {
        return Err(format_err(format!(
            "expected kind {kind:?}, found {:?}",
            sidecar.kind
        )));
    }

    let raw = payload_path(path);
    let bytes = fs::read(&raw).map_err(|e| Error::io(&raw, e))?;
    let corrupt = |msg: String| Error::Corruption {
        path: raw.clone(),
        msg,
    };
    let expected = sidecar
        .width
        .checked_mul(sidecar.height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| corrupt("declared dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(corrupt(format!(
            "payload has {} bytes, sidecar declares {}x{} ({} bytes)",
            bytes.len(),
            sidecar.width,
            sidecar.height,
            expected
        )));
    }
    let checksum = sha256_hex(&bytes);
    if checksum != sidecar.checksum_sha256 {
        return Err(corrupt("payload checksum does not match sidecar".into()));
    }
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation(format!(
            "{} contains non-finite samples",
            raw.display()
        )));
    }
    Ok((sidecar, values))
}

/// Write `img` as a RAWF pair next to `path`; returns the payload checksum.
pub fn write_image<T: Real>(img: &ImageGrid<T>, path: impl AsRef<Path>) -> Result<String> {
    let payload = encode(img.values().iter().copied());
    write_pair(
        path.as_ref(),
        &payload,
        Sidecar {
            format: RAWF_FORMAT.into(),
            kind: RawKind::Image,
            dtype: RAWF_DTYPE.into(),
            width: img.width(),
            height: img.height(),
            spacing_mm: Some(img.spacing_mm()),
            detector_spacing_mm: None,
            angles_rad: None,
            checksum_sha256: String::new(),
        },
    )
}

pub fn read_image<T: Real>(path: impl AsRef<Path>) -> Result<ImageGrid<T>> {
    let path = path.as_ref();
    let (sc, values) = read_pair(path, RawKind::Image)?;
    let spacing = sc.spacing_mm.ok_or_else(|| Error::Format {
        path: sidecar_path(path),
        msg: "image sidecar lacks spacing_mm".into(),
    })?;
    ImageGrid::new(
        sc.width,
        sc.height,
        spacing,
        values.into_iter().map(|v| T::of(v as f64)).collect(),
    )
}

pub fn write_sinogram<T: Real>(sino: &Sinogram<T>, path: impl AsRef<Path>) -> Result<String> {
    let payload = encode(sino.values().iter().copied());
    write_pair(
        path.as_ref(),
        &payload,
        Sidecar {
            format: RAWF_FORMAT.into(),
            kind: RawKind::Sinogram,
            dtype: RAWF_DTYPE.into(),
            width: sino.n_detectors(),
            height: sino.n_views(),
            spacing_mm: None,
            detector_spacing_mm: Some(sino.detector_spacing_mm()),
            angles_rad: Some(sino.angles_rad().to_vec()),
            checksum_sha256: String::new(),
        },
    )
}

pub fn read_sinogram<T: Real>(path: impl AsRef<Path>) -> Result<Sinogram<T>> {
    let path = path.as_ref();
    let (sc, values) = read_pair(path, RawKind::Sinogram)?;
    let missing = |what: &str| Error::Format {
        path: sidecar_path(path),
        msg: format!("sinogram sidecar lacks {what}"),
    };
    let spacing = sc
        .detector_spacing_mm
        .ok_or_else(|| missing("detector_spacing_mm"))?;
    let angles = sc.angles_rad.ok_or_else(|| missing("angles_rad"))?;
    if angles.len() != sc.height {
        return Err(Error::Corruption {
            path: sidecar_path(path),
            msg: format!(
                "angle list has {} entries, sidecar declares {} views",
                angles.len(),
                sc.height
            ),
        });
    }
    Sinogram::new(
        sc.width,
        angles,
        spacing,
        values.into_iter().map(|v| T::of(v as f64)).collect(),
    )
}

/// Masks are stored as 0.0 / 1.0 samples.
pub fn write_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<String> {
    let payload = encode(
        mask.values()
            .iter()
            .map(|&b| if b { 1.0f32 } else { 0.0f32 }),
    );
    write_pair(
        path.as_ref(),
        &payload,
        Sidecar {
            format: RAWF_FORMAT.into(),
            kind: RawKind::Mask,
            dtype: RAWF_DTYPE.into(),
            width: mask.width(),
            height: mask.height(),
            spacing_mm: Some(mask.spacing_mm()),
            detector_spacing_mm: None,
            angles_rad: None,
            checksum_sha256: String::new(),
        },
    )
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let (sc, values) = read_pair(path, RawKind::Mask)?;
    let spacing = sc.spacing_mm.ok_or_else(|| Error::Format {
        path: sidecar_path(path),
        msg: "mask sidecar lacks spacing_mm".into(),
    })?;
    BinaryMask::new(
        sc.width,
        sc.height,
        spacing,
        values.into_iter().map(|v| v != 0.0).collect(),
    )
}
