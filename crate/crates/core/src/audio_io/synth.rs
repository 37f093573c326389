//! Deterministic harmonic-tone corpus standing in for recorded speech.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::clip::{AudioClip, FeatureMatrix, FRAME_HOP, MEL_BANDS};

pub const SYNTH_SAMPLE_RATE: u32 = 16_000;
pub const PITCH_RANGE_HZ: (f64, f64) = (80.0, 400.0);
const HARMONICS: usize = 4;
const AMP_FLOOR: f64 = 1e-3;

/// One aligned audio/feature pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub audio: AudioClip,
    pub features: FeatureMatrix,
}

/// Band holding pitch `f0`.
pub fn pitch_band(f0: f64) -> usize {
    let (lo, hi) = PITCH_RANGE_HZ;
    let x = ((f0 - lo) / (hi - lo)).clamp(0.0, 1.0);
    ((x * MEL_BANDS as f64) as usize).min(MEL_BANDS - 1)
}

fn envelope(peak: f64, t: f64, duration: f64) -> f64 {
    peak * (0.3 + 0.7 * (PI * t / duration).sin())
}

/// Feature frame: one-hot on the pitch band plus log-amplitude on every band.
fn frame_features(band: usize, amplitude: f64) -> impl Iterator<Item = f32> {
    let la = amplitude.max(AMP_FLOOR).ln() / AMP_FLOOR.ln().abs();
    (0..MEL_BANDS).map(move |b| (if b == band { 1.0 } else { 0.0 } + la) as f32)
}

/// `n_clips` tones of `duration` seconds (rounded down to whole frames).
pub fn synth_dataset(seed: u64, n_clips: usize, duration: f64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames = (duration * SYNTH_SAMPLE_RATE as f64 / FRAME_HOP as f64).floor().max(0.0) as usize;
    let len = frames * FRAME_HOP;
    let dur = len.max(1) as f64;
    let norm: f64 = (1..=HARMONICS).map(|k| 1.0 / k as f64).sum();
    (0..n_clips)
        .map(|_| {
            let f0 = rng.gen_range(PITCH_RANGE_HZ.0..PITCH_RANGE_HZ.1);
            let peak = rng.gen_range(0.3..0.8);
            let phase = rng.gen_range(0.0..2.0 * PI);
            let samples = (0..len)
                .map(|i| {
                    let t = i as f64 / SYNTH_SAMPLE_RATE as f64;
                    let tone: f64 = (1..=HARMONICS)
                        .map(|k| (2.0 * PI * f0 * k as f64 * t + phase * k as f64).sin() / k as f64)
                        .sum();
                    (envelope(peak, i as f64, dur) * tone / norm) as f32
                })
                .collect();
            let band = pitch_band(f0);
            let data = (0..frames)
                .flat_map(|f| {
                    let center = (f * FRAME_HOP + FRAME_HOP / 2) as f64;
                    frame_features(band, envelope(peak, center, dur))
                })
                .collect();
            Example {
                audio: AudioClip::new(samples, SYNTH_SAMPLE_RATE),
                features: FeatureMatrix::new(frames, MEL_BANDS, data).expect("frame layout"),
            }
        })
        .collect()
}
