//! Symmetric per-tensor INT8 with zero point fixed at 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const INT8_MAX: i32 = 127;

/// Scale used in place of zero when a tensor is identically zero.
pub const DEGENERATE_SCALE: f64 = f32::MIN_POSITIVE as f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntQuantParams {
    scale: f64,
}

impl IntQuantParams {
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "INT8 scale must be positive and finite, got {scale}"
            )));
        }
        Ok(Self { scale })
    }

    /// `max_abs / 127`; returns `(params, degenerate)` where `degenerate`
    /// marks an all-zero input that received [`DEGENERATE_SCALE`].
    pub fn from_max_abs(max_abs: f64) -> Result<(Self, bool)> {
        if !max_abs.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "cannot calibrate on non-finite range {max_abs}"
            )));
        }
        if max_abs == 0.0 {
            return Ok((Self { scale: DEGENERATE_SCALE }, true));
        }
        Ok((Self::new(max_abs / INT8_MAX as f64)?, false))
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn zero_point(&self) -> i32 {
        0
    }
}

#[inline]
pub fn quantize_int8_value(x: f64, scale: f64) -> i8 {
    let q = (x / scale).round_ties_even();
    q.clamp(-(INT8_MAX as f64), INT8_MAX as f64) as i8
}

#[derive(Debug, Clone, PartialEq)]
pub struct Int8Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<i8>,
    pub params: IntQuantParams,
}

impl Int8Tensor {
    pub fn dequantize<T: Scalar>(&self) -> Tensor<T> {
        let s = self.params.scale();
        let data = self
            .data
            .iter()
            .map(|&q| T::from_f64_lossy(q as f64 * s))
            .collect();
        Tensor::from_vec(&self.shape, data).expect("shape preserved")
    }
}

pub fn quantize_int8<T: Scalar>(t: &Tensor<T>, p: &IntQuantParams) -> Int8Tensor {
    let s = p.scale();
    Int8Tensor {
        shape: t.shape().to_vec(),
        data: t.data().iter().map(|x| quantize_int8_value(x.as_f64(), s)).collect(),
        params: *p,
    }
}
