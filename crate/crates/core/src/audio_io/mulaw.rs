//! µ-law companding onto `channels` codes with an exact-zero center code.
//!
//! Companded values `y` in `[-1, 1]` sit on a grid with the silence code
//! `channels / 2` at `y = 0`: `channels / 2` steps cover `[-1, 0)` and
//! `channels / 2 - 1` steps cover `(0, 1]`, so code 0 is -1, the top code
//! is +1 and zero survives a round trip exactly.

use crate::error::{Error, Result};

pub const MULAW_CHANNELS: usize = 256;

fn mu(channels: usize) -> f64 {
    (channels - 1) as f64
}

pub fn compand(x: f64, channels: usize) -> f64 {
    let x = x.clamp(-1.0, 1.0);
    let mu = mu(channels);
    x.signum() * (mu * x.abs()).ln_1p() / mu.ln_1p()
}

pub fn expand(y: f64, channels: usize) -> f64 {
    if y.abs() >= 1.0 {
        return y.signum();
    }
    let mu = mu(channels);
    y.signum() * ((mu.ln_1p() * y.abs()).exp() - 1.0) / mu
}

/// Amplitude in `[-1, 1]` (clamped) to a code in `0..channels`.
pub fn mulaw_encode_channels(x: f64, channels: usize) -> usize {
    let center = (channels / 2) as f64;
    let y = compand(if x.is_nan() { 0.0 } else { x }, channels);
    let steps = if y < 0.0 { center } else { center - 1.0 };
    (center + (y * steps).round()) as usize
}

/// Code to amplitude; the silence code decodes to exactly 0.
pub fn mulaw_decode_channels(code: usize, channels: usize) -> Result<f64> {
    if code >= channels {
        return Err(Error::CodeOutOfRange {
            code: code as i64,
            channels,
        });
    }
    let center = channels / 2;
    let y = if code < center {
        (code as f64 - center as f64) / center as f64
    } else {
        (code - center) as f64 / (center - 1) as f64
    };
    Ok(expand(y, channels))
}

pub fn mulaw_encode(x: f64) -> usize {
    mulaw_encode_channels(x, MULAW_CHANNELS)
}

pub fn mulaw_decode(code: usize) -> Result<f64> {
    mulaw_decode_channels(code, MULAW_CHANNELS)
}
