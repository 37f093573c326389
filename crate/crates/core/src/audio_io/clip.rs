use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Mono audio with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl AudioClip {
    /// Samples outside `[-1, 1]` are clamped.
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Self {
        let samples = samples.into_iter().map(|s| s.clamp(-1.0, 1.0)).collect();
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Conditioning features, `frames x bands`, stored frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    frames: usize,
    bands: usize,
    data: Vec<f32>,
}

/// Audio samples per feature frame.
pub const FRAME_HOP: usize = 200;

/// Number of bands of the standard feature layout.
pub const MEL_BANDS: usize = 80;

impl FeatureMatrix {
    pub fn new(frames: usize, bands: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != frames * bands {
            return Err(Error::Shape(format!(
                "{frames} x {bands} feature matrix needs {} values, got {}",
                frames * bands,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("features must be finite".into()));
        }
        Ok(Self { frames, bands, data })
    }

    pub fn zeros(frames: usize, bands: usize) -> Self {
        Self {
            frames,
            bands,
            data: vec![0.0; frames * bands],
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn frame(&self, i: usize) -> &[f32] {
        &self.data[i * self.bands..(i + 1) * self.bands]
    }

    /// Frames `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            frames: end - start,
            bands: self.bands,
            data: self.data[start * self.bands..end * self.bands].to_vec(),
        }
    }

    /// Channel-major tensor `[bands x frames]` as consumed by the model.
    pub fn to_tensor<T: Scalar>(&self) -> Tensor<T> {
        let mut t = Tensor::zeros(&[self.bands, self.frames]);
        for f in 0..self.frames {
            for b in 0..self.bands {
                t.data_mut()[b * self.frames + f] = T::from_f64_lossy(self.data[f * self.bands + b] as f64);
            }
        }
        t
    }
}
