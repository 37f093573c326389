//! WaveNet vocoder under emulated reduced-precision formats, with magnitude
//! pruning and compression accounting.

pub mod audio_io;
pub mod compression;
pub mod error;
pub mod kernels;
pub mod model;
pub mod numerics;
mod scalar;
mod tensor;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::Tensor;

pub type Tensor32 = Tensor<f32>;
pub type Tensor64 = Tensor<f64>;
pub type Parameters32 = model::Parameters<f32>;
pub type Parameters64 = model::Parameters<f64>;
pub type Checkpoint32 = audio_io::Checkpoint<f32>;
