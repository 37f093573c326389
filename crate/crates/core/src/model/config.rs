use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// WaveNet hyperparameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub skip_channels: usize,
    pub residual_channels: usize,
    pub audio_channels: usize,
    pub layers: usize,
    pub dilation_cycle: usize,
    pub mel_bins: usize,
    pub upsample_kernel: usize,
    pub upsample_stride: usize,
    pub sample_rate: u32,
}

/// Kernel width of every dilated convolution.
pub const DILATION_KERNEL: usize = 2;

impl ModelConfig {
    /// The full-size vocoder: s=240, r=120, a=256, L=16, D=8.
    pub fn paper() -> Self {
        Self {
            skip_channels: 240,
            residual_channels: 120,
            audio_channels: 256,
            layers: 16,
            dilation_cycle: 8,
            mel_bins: 80,
            upsample_kernel: 800,
            upsample_stride: 200,
            sample_rate: 16_000,
        }
    }

    /// Desk-scale default used for training experiments.
    pub fn desk() -> Self {
        Self {
            skip_channels: 32,
            residual_channels: 16,
            audio_channels: 256,
            layers: 4,
            dilation_cycle: 2,
            ..Self::paper()
        }
    }

    /// Smallest configuration used by fast tests.
    pub fn tiny() -> Self {
        Self {
            skip_channels: 16,
            residual_channels: 8,
            audio_channels: 32,
            layers: 4,
            dilation_cycle: 2,
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonzero = [
            ("skip_channels", self.skip_channels),
            ("residual_channels", self.residual_channels),
            ("audio_channels", self.audio_channels),
            ("layers", self.layers),
            ("dilation_cycle", self.dilation_cycle),
            ("mel_bins", self.mel_bins),
            ("upsample_kernel", self.upsample_kernel),
            ("upsample_stride", self.upsample_stride),
            ("sample_rate", self.sample_rate as usize),
        ];
        if let Some((name, _)) = nonzero.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if !self.audio_channels.is_power_of_two() || self.audio_channels < 2 {
            return Err(Error::Config("audio_channels must be a power of two >= 2".into()));
        }
        if self.dilation_cycle > 24 {
            return Err(Error::Config("dilation_cycle too large".into()));
        }
        if self.upsample_kernel < self.upsample_stride {
            return Err(Error::Config("upsample kernel shorter than its stride".into()));
        }
        Ok(())
    }

    /// Dilation of repeated layer `i`: `2^(i mod D)`.
    pub fn dilation(&self, layer: usize) -> usize {
        1 << (layer % self.dilation_cycle)
    }

    /// Whether layer `i` owns a residual convolution. The last layer's
    /// residual output would never be read, so it has none.
    pub fn has_residual(&self, layer: usize) -> bool {
        layer + 1 < self.layers
    }

    /// Number of past samples (inclusive of the current one) that influence
    /// a layer-stack output: `1 + sum(dilation * (kernel - 1))`.
    pub fn receptive_field(&self) -> usize {
        1 + (0..self.layers)
            .map(|i| self.dilation(i) * (DILATION_KERNEL - 1))
            .sum::<usize>()
    }

    /// Audio code standing for silence.
    pub fn silence_code(&self) -> usize {
        self.audio_channels / 2
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::paper()
    }
}
