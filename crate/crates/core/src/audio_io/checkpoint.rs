//! Checkpoint container: a `WNCKPT1 <manifest bytes>` line, a JSON manifest,
//! then raw little-endian blobs (tensors in their scalar width, masks packed
//! one bit per weight, LSB first), each guarded by a CRC-32.

use std::collections::BTreeMap;
use std::fs;
use std::mem::size_of;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::compression::{Mask, MaskScheme, MaskSet, PruneSchedules};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, Parameters};
use crate::numerics::{FormatName, Int8Calibration};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

const MAGIC: &str = "WNCKPT1";

/// Everything needed to resume, quantize, report on, or synthesize from a
/// model.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub params: Parameters<T>,
    pub masks: MaskSet,
    /// Storage/execution format the weights are tagged with.
    pub format: FormatName,
    pub seed: u64,
    /// Training steps completed.
    pub step: usize,
    pub schedules: Option<PruneSchedules>,
    pub calibration: Option<Int8Calibration>,
    pub metadata: BTreeMap<String, String>,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn new(params: Parameters<T>, seed: u64) -> Self {
        Self {
            params,
            masks: MaskSet::new(),
            format: FormatName::Fp32,
            seed,
            step: 0,
            schedules: None,
            calibration: None,
            metadata: BTreeMap::new(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    dtype: String,
    offset: u64,
    len: u64,
    crc32: u32,
}

#[derive(Serialize, Deserialize)]
struct MaskEntry {
    owner: String,
    scheme: MaskScheme,
    shape: Vec<usize>,
    popcount: usize,
    offset: u64,
    len: u64,
    crc32: u32,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    config: ModelConfig,
    format: FormatName,
    seed: u64,
    step: usize,
    schedules: Option<PruneSchedules>,
    calibration: Option<Int8Calibration>,
    metadata: BTreeMap<String, String>,
    tensors: Vec<TensorEntry>,
    masks: Vec<MaskEntry>,
}

fn malformed(reason: impl Into<String>) -> Error {
    Error::Format {
        kind: "checkpoint",
        reason: reason.into(),
    }
}

fn dtype_of<T>() -> &'static str {
    if size_of::<T>() == 4 {
        "f32"
    } else {
        "f64"
    }
}

fn tensor_bytes<T: Scalar>(t: &Tensor<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(t.numel() * size_of::<T>());
    for &v in t.data() {
        if size_of::<T>() == 4 {
            out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
        } else {
            out.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    }
    out
}

pub fn encode_checkpoint<T: Scalar>(ck: &Checkpoint<T>) -> Result<Vec<u8>> {
    let mut blobs = Vec::new();
    let mut tensors = Vec::new();
    for (info, t) in ck.params.iter() {
        let bytes = tensor_bytes(t);
        tensors.push(TensorEntry {
            name: info.name.clone(),
            shape: t.shape().to_vec(),
            dtype: dtype_of::<T>().into(),
            offset: blobs.len() as u64,
            len: bytes.len() as u64,
            crc32: crc32fast::hash(&bytes),
        });
        blobs.extend_from_slice(&bytes);
    }
    let mut masks = Vec::new();
    for m in ck.masks.iter() {
        let bytes = m.pack();
        masks.push(MaskEntry {
            owner: m.owner().into(),
            scheme: m.scheme(),
            shape: m.shape().to_vec(),
            popcount: m.popcount(),
            offset: blobs.len() as u64,
            len: bytes.len() as u64,
            crc32: crc32fast::hash(&bytes),
        });
        blobs.extend_from_slice(&bytes);
    }
    let manifest = Manifest {
        config: ck.params.config().clone(),
        format: ck.format,
        seed: ck.seed,
        step: ck.step,
        schedules: ck.schedules.clone(),
        calibration: ck.calibration.clone(),
        metadata: ck.metadata.clone(),
        tensors,
        masks,
    };
    let json = serde_json::to_vec_pretty(&manifest)?;
    let mut out = format!("{MAGIC} {}\n", json.len()).into_bytes();
    out.extend_from_slice(&json);
    out.extend_from_slice(&blobs);
    Ok(out)
}

fn blob<'a>(blobs: &'a [u8], offset: u64, len: u64, crc: u32, what: &str) -> Result<&'a [u8]> {
    let end = offset
        .checked_add(len)
        .filter(|&e| e <= blobs.len() as u64)
        .ok_or_else(|| malformed(format!("blob `{what}` lies outside the file")))?;
    let bytes = &blobs[offset as usize..end as usize];
    if crc32fast::hash(bytes) != crc {
        return Err(Error::Checksum(what.to_string()));
    }
    Ok(bytes)
}

pub fn decode_checkpoint<T: Scalar>(bytes: &[u8]) -> Result<Checkpoint<T>> {
    let nl = bytes
        .iter()
        .take(64)
        .position(|&b| b == b'\n')
        .ok_or_else(|| malformed("missing header line"))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| malformed("header is not UTF-8"))?;
    let len: usize = header
        .strip_prefix(MAGIC)
        .and_then(|rest| rest.trim().parse().ok())
        .ok_or_else(|| malformed(format!("bad header `{header}`")))?;
    let start = nl + 1;
    if bytes.len() < start + len {
        return Err(malformed("manifest truncated"));
    }
    let manifest: Manifest = serde_json::from_slice(&bytes[start..start + len])?;
    let blobs = &bytes[start + len..];
    let expected: u64 = manifest.tensors.iter().map(|t| t.len).sum::<u64>()
        + manifest.masks.iter().map(|m| m.len).sum::<u64>();
    if expected != blobs.len() as u64 {
        return Err(malformed(format!(
            "manifest describes {expected} blob bytes, file holds {}",
            blobs.len()
        )));
    }

    let mut named = Vec::with_capacity(manifest.tensors.len());
    for e in &manifest.tensors {
        let raw = blob(blobs, e.offset, e.len, e.crc32, &e.name)?;
        let data: Vec<T> = match e.dtype.as_str() {
            "f32" => raw
                .chunks_exact(4)
                .map(|c| T::from_f64_lossy(f32::from_le_bytes(c.try_into().unwrap()) as f64))
                .collect(),
            "f64" => raw
                .chunks_exact(8)
                .map(|c| T::from_f64_lossy(f64::from_le_bytes(c.try_into().unwrap())))
                .collect(),
            other => return Err(malformed(format!("`{}` has unknown dtype `{other}`", e.name))),
        };
        let t = Tensor::from_vec(&e.shape, data)
            .map_err(|_| malformed(format!("`{}` blob does not match its shape", e.name)))?;
        named.push((e.name.clone(), t));
    }
    let params = Parameters::from_named(&manifest.config, named)?;

    let mut masks = MaskSet::new();
    for e in &manifest.masks {
        let raw = blob(blobs, e.offset, e.len, e.crc32, &format!("{} (mask)", e.owner))?;
        let m = Mask::unpack(e.owner.clone(), e.scheme, &e.shape, raw)?;
        if params.get(&e.owner).map(|t| t.shape()) != Some(e.shape.as_slice()) {
            return Err(malformed(format!("mask `{}` does not match a tensor", e.owner)));
        }
        if m.popcount() != e.popcount {
            return Err(malformed(format!("mask `{}` popcount mismatch", e.owner)));
        }
        masks.insert(m);
    }

    Ok(Checkpoint {
        params,
        masks,
        format: manifest.format,
        seed: manifest.seed,
        step: manifest.step,
        schedules: manifest.schedules,
        calibration: manifest.calibration,
        metadata: manifest.metadata,
    })
}

pub fn write_checkpoint<T: Scalar>(path: impl AsRef<Path>, ck: &Checkpoint<T>) -> Result<()> {
    fs::write(path, encode_checkpoint(ck)?)?;
    Ok(())
}

pub fn read_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<Checkpoint<T>> {
    decode_checkpoint(&fs::read(path)?)
}
