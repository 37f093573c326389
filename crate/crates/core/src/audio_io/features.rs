//! WNF1 feature files: magic, version, frames, bands (u32 LE each), then
//! frame-major f32 LE values.

use std::fs;
use std::path::Path;

use super::clip::FeatureMatrix;
use crate::error::{Error, Result};

pub const WNF_MAGIC: &[u8; 4] = b"WNF1";
pub const WNF_VERSION: u32 = 1;

fn malformed(reason: impl Into<String>) -> Error {
    Error::Format {
        kind: "WNF1",
        reason: reason.into(),
    }
}

pub fn encode_features(fm: &FeatureMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + fm.data().len() * 4);
    out.extend_from_slice(WNF_MAGIC);
    out.extend_from_slice(&WNF_VERSION.to_le_bytes());
    out.extend_from_slice(&(fm.frames() as u32).to_le_bytes());
    out.extend_from_slice(&(fm.bands() as u32).to_le_bytes());
    for v in fm.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Decode and check the band count against `expected_bands`.
pub fn decode_features(bytes: &[u8], expected_bands: usize) -> Result<FeatureMatrix> {
    if bytes.len() < 16 {
        return Err(malformed("header truncated"));
    }
    if &bytes[0..4] != WNF_MAGIC {
        return Err(malformed("magic mismatch"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != WNF_VERSION {
        return Err(malformed(format!("unsupported version {version}")));
    }
    let frames = word(8) as usize;
    let bands = word(12) as usize;
    if bands != expected_bands {
        return Err(malformed(format!("{bands} bands, expected {expected_bands}")));
    }
    let need = frames
        .checked_mul(bands)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| malformed("size overflow"))?;
    if bytes.len() - 16 != need {
        return Err(malformed(format!(
            "payload is {} bytes, header implies {need}",
            bytes.len() - 16
        )));
    }
    let data = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FeatureMatrix::new(frames, bands, data)
}

pub fn write_features(path: impl AsRef<Path>, fm: &FeatureMatrix) -> Result<()> {
    fs::write(path, encode_features(fm))?;
    Ok(())
}

pub fn read_features(path: impl AsRef<Path>, expected_bands: usize) -> Result<FeatureMatrix> {
    decode_features(&fs::read(path)?, expected_bands)
}
