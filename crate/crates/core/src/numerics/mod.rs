//! Emulation of the evaluated numeric formats and their storage costs.

mod block;
mod calibrate;
mod format;
mod int8;
mod round;
mod storage;

pub use block::{block_count, quantize_block, quantize_block_fp, BFP_MAGNITUDE_BITS};
pub use calibrate::{calibrate_int8, Int8Calibration};
pub use format::{ActFormat, FormatKind, FormatName, FormatSpec, BFP_BLOCK_SIZE};
pub use int8::{
    quantize_int8, quantize_int8_value, Int8Tensor, IntQuantParams, DEGENERATE_SCALE, INT8_MAX,
};
pub use round::{max_finite, min_subnormal, round_float, round_scalar};
pub use storage::{bits_per_value, storage_channel_axis, stored_bits};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Convert a tensor to format `f`. Floating kinds round element-wise, BFP16
/// blocks along `channel_axis`, INT8 requires `int8` params and returns the
/// dequantized grid values.
pub fn quantize_tensor<T: Scalar>(
    t: &Tensor<T>,
    f: &FormatSpec,
    channel_axis: usize,
    int8: Option<&IntQuantParams>,
) -> Result<Tensor<T>> {
    match f.kind {
        FormatKind::Floating => {
            let (e, m) = (f.exponent_bits, f.mantissa_bits);
            Ok(t.map(|x| round_scalar(x, e, m)))
        }
        FormatKind::BlockFloating => Ok(quantize_block_fp(t, channel_axis)),
        FormatKind::Integer => {
            let p = int8.ok_or_else(|| Error::CalibrationRequired("tensor quantization".into()))?;
            Ok(quantize_int8(t, p).dequantize())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fp32_identity_and_powers_of_two() {
        let t = Tensor::from_vec(&[2, 3], vec![0.1f32, -3.7, 1e-3, 5.0, 0.0, 7.25]).unwrap();
        let q = quantize_tensor(&t, &FormatName::Fp32.spec(), 0, None).unwrap();
        assert_eq!(q, t);
        let p = Tensor::from_vec(&[4], vec![0.5f32, -4.0, 1024.0, 2f32.powi(-20)]).unwrap();
        let q = quantize_tensor(&p, &FormatName::Bf16.spec(), 0, None).unwrap();
        assert_eq!(q, p);
    }

    #[test]
    fn int8_needs_params() {
        let t = Tensor::from_vec(&[2], vec![0.5f32, 1.0]).unwrap();
        let err = quantize_tensor(&t, &FormatName::Int8.spec(), 0, None).unwrap_err();
        assert!(matches!(err, Error::CalibrationRequired(_)));
        let p = IntQuantParams::new(1.0 / 127.0).unwrap();
        let q = quantize_tensor(&t, &FormatName::Int8.spec(), 0, Some(&p)).unwrap();
        assert_eq!(q.data()[1], 1.0);
    }
}
