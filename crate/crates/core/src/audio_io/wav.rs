//! Canonical 44-byte-header PCM16 mono WAV.

use std::fs;
use std::path::Path;

use super::clip::AudioClip;
use crate::error::{Error, Result};

const HEADER_LEN: usize = 44;

fn malformed(reason: impl Into<String>) -> Error {
    Error::Format {
        kind: "WAV",
        reason: reason.into(),
    }
}

/// Nearest 16-bit PCM value of a sample in `[-1, 1]`.
pub fn sample_to_pcm16(x: f32) -> i16 {
    (x.clamp(-1.0, 1.0) as f64 * 32767.0).round() as i16
}

pub fn pcm16_to_sample(v: i16) -> f32 {
    (v as f64 / 32767.0).max(-1.0) as f32
}

pub fn encode_wav(clip: &AudioClip) -> Vec<u8> {
    let data_len = (clip.samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(HEADER_LEN + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&clip.sample_rate.to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in &clip.samples {
        out.extend_from_slice(&sample_to_pcm16(s).to_le_bytes());
    }
    out
}

pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(malformed("missing RIFF/WAVE header"));
    }
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let mut pos = 12;
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(pos + 4) as usize;
        let body = pos + 8;
        if body + size > bytes.len() {
            return Err(malformed(format!(
                "chunk `{}` runs past end of file",
                String::from_utf8_lossy(id)
            )));
        }
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(malformed("fmt chunk too short"));
                }
                fmt = Some((u16_at(body), u16_at(body + 2), u32_at(body + 4), u16_at(body + 14)));
            }
            b"data" => {
                let (format, channels, rate, bits) =
                    fmt.ok_or_else(|| malformed("data chunk before fmt chunk"))?;
                if format != 1 || bits != 16 {
                    return Err(malformed(format!(
                        "unsupported encoding (format {format}, {bits} bits); need PCM16"
                    )));
                }
                if channels != 1 {
                    return Err(malformed(format!("{channels} channels; only mono is supported")));
                }
                if !size.is_multiple_of(2) {
                    return Err(malformed("odd data length"));
                }
                let samples = bytes[body..body + size]
                    .chunks_exact(2)
                    .map(|b| pcm16_to_sample(i16::from_le_bytes([b[0], b[1]])))
                    .collect();
                return Ok(AudioClip {
                    samples,
                    sample_rate: rate,
                });
            }
            _ => {}
        }
        pos = body + size + (size & 1);
    }
    Err(malformed("no data chunk"))
}

pub fn write_wav(path: impl AsRef<Path>, clip: &AudioClip) -> Result<()> {
    fs::write(path, encode_wav(clip))?;
    Ok(())
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    decode_wav(&fs::read(path)?)
}
