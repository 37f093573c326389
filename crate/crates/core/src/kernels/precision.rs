use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    quantize_block, quantize_int8_value, round_float, round_scalar, ActFormat, FormatKind,
    FormatName, FormatSpec, IntQuantParams, BFP_BLOCK_SIZE,
};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Precision contract for one execution: convolution operands are converted
/// to the INP format, sums and nonlinearities run in the ACT format.
///
/// `native()` performs no emulation and computes in the tensor scalar type;
/// it is what training uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionContext {
    format: Option<FormatName>,
}

/// Width of the integer accumulator on INT8 paths.
pub const INT_ACCUMULATOR_BITS: u32 = 64;

impl PrecisionContext {
    pub fn native() -> Self {
        Self { format: None }
    }

    pub fn new(format: FormatName) -> Self {
        Self {
            format: Some(format),
        }
    }

    pub fn format(&self) -> Option<FormatName> {
        self.format
    }

    pub fn inp(&self) -> Option<FormatSpec> {
        self.format.map(FormatSpec::of)
    }

    pub fn act(&self) -> Option<ActFormat> {
        self.inp().map(|f| f.accumulation)
    }

    pub fn is_int8(&self) -> bool {
        self.format == Some(FormatName::Int8)
    }

    /// Round an activation value into the ACT format. FP16 saturates at
    /// its largest finite value; INT8 activations are requantized at the
    /// next convolution input instead, so they pass through here.
    #[inline]
    pub fn round_act<T: Scalar>(&self, x: T) -> T {
        match self.act() {
            Some(ActFormat::Fp32) => x.round_to_f32(),
            Some(ActFormat::Fp16) => saturate_f16(x),
            Some(ActFormat::Int8) | None => x,
        }
    }

    /// Convert an activation tensor `[C x T]` (channels on axis 0) to INP.
    pub fn quantize_activation<T: Scalar>(
        &self,
        t: &Tensor<T>,
        site: Option<&IntQuantParams>,
    ) -> Result<Tensor<T>> {
        let Some(spec) = self.inp() else {
            return Ok(t.clone());
        };
        match spec.kind {
            FormatKind::Floating => {
                Ok(t.map(|x| round_scalar(x, spec.exponent_bits, spec.mantissa_bits)))
            }
            FormatKind::BlockFloating => Ok(crate::numerics::quantize_block_fp(t, 0)),
            FormatKind::Integer => {
                let p = site.ok_or_else(|| {
                    Error::CalibrationRequired("activation site scale missing".into())
                })?;
                let s = p.scale();
                Ok(t.map(|x| T::from_f64_lossy(quantize_int8_value(x.as_f64(), s) as f64 * s)))
            }
        }
    }

    /// Convert a single channel column to INP; equivalent to one column of
    /// [`quantize_activation`](Self::quantize_activation).
    pub fn quantize_column<T: Scalar>(
        &self,
        col: &[T],
        site: Option<&IntQuantParams>,
    ) -> Result<Vec<T>> {
        let Some(spec) = self.inp() else {
            return Ok(col.to_vec());
        };
        match spec.kind {
            FormatKind::Floating => Ok(col
                .iter()
                .map(|&x| round_scalar(x, spec.exponent_bits, spec.mantissa_bits))
                .collect()),
            FormatKind::BlockFloating => {
                let mut out = Vec::with_capacity(col.len());
                let mut buf = [0.0f64; BFP_BLOCK_SIZE];
                for chunk in col.chunks(BFP_BLOCK_SIZE) {
                    for (b, &x) in buf.iter_mut().zip(chunk) {
                        *b = x.as_f64();
                    }
                    quantize_block(&mut buf[..chunk.len()]);
                    out.extend(buf[..chunk.len()].iter().map(|&v| T::from_f64_lossy(v)));
                }
                Ok(out)
            }
            FormatKind::Integer => {
                let p = site.ok_or_else(|| {
                    Error::CalibrationRequired("activation site scale missing".into())
                })?;
                let s = p.scale();
                Ok(col
                    .iter()
                    .map(|&x| T::from_f64_lossy(quantize_int8_value(x.as_f64(), s) as f64 * s))
                    .collect())
            }
        }
    }

    /// Convert a weight or bias tensor to INP (weights block along axis 1).
    pub fn quantize_param<T: Scalar>(
        &self,
        t: &Tensor<T>,
        int8: Option<&IntQuantParams>,
    ) -> Result<Tensor<T>> {
        match self.inp() {
            None => Ok(t.clone()),
            Some(spec) => crate::numerics::quantize_tensor(
                t,
                &spec,
                crate::numerics::storage_channel_axis(t.shape()),
                int8,
            ),
        }
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self::new(FormatName::Fp32)
    }
}

/// Round to binary16, clamping finite overflow to +-65504.
#[inline(always)]
pub(crate) fn saturate_f16<T: Scalar>(x: T) -> T {
    T::from_f64_lossy(round_f16_saturating(x.as_f64()))
}

#[inline(always)]
fn round_f16_saturating(x: f64) -> f64 {
    const MAX: f64 = 65504.0;
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    if exp >= 1023 - 14 && exp != 0x7ff {
        // normal binary16 range: round the top 10 fraction bits, ties to even
        let r = (bits + (1u64 << 41) - 1 + ((bits >> 42) & 1)) & !((1u64 << 42) - 1);
        let v = f64::from_bits(r);
        if v.abs() > MAX {
            MAX.copysign(x)
        } else {
            v
        }
    } else {
        round_float(x, 5, 10)
    }
}

/// Accumulation rule for one ACT format; monomorphized into the inner loops.
pub(crate) trait Accum<T: Scalar>: Copy {
    /// `acc + a * b` rounded into the accumulator format.
    fn mac(self, acc: T, a: T, b: T) -> T;
    fn add(self, acc: T, x: T) -> T;
}

#[derive(Clone, Copy)]
pub(crate) struct NativeAcc;

#[derive(Clone, Copy)]
pub(crate) struct F32Acc;

#[derive(Clone, Copy)]
pub(crate) struct F16Acc;

impl<T: Scalar> Accum<T> for NativeAcc {
    #[inline(always)]
    fn mac(self, acc: T, a: T, b: T) -> T {
        acc + a * b
    }
    #[inline(always)]
    fn add(self, acc: T, x: T) -> T {
        acc + x
    }
}

impl<T: Scalar> Accum<T> for F32Acc {
    #[inline(always)]
    fn mac(self, acc: T, a: T, b: T) -> T {
        (acc + a * b).round_to_f32()
    }
    #[inline(always)]
    fn add(self, acc: T, x: T) -> T {
        (acc + x).round_to_f32()
    }
}

impl<T: Scalar> Accum<T> for F16Acc {
    #[inline(always)]
    fn mac(self, acc: T, a: T, b: T) -> T {
        // round once, straight from the exact f64 sum
        T::from_f64_lossy(round_f16_saturating(acc.as_f64() + a.as_f64() * b.as_f64()))
    }
    #[inline(always)]
    fn add(self, acc: T, x: T) -> T {
        T::from_f64_lossy(round_f16_saturating(acc.as_f64() + x.as_f64()))
    }
}

/// Sum a sequence in the ACT format of `ctx`, left to right.
pub fn accumulate<T: Scalar>(values: &[T], ctx: &PrecisionContext) -> T {
    match ctx.act() {
        Some(ActFormat::Fp32) => values.iter().fold(T::zero(), |a, &x| F32Acc.add(a, x)),
        Some(ActFormat::Fp16) => values.iter().fold(T::zero(), |a, &x| F16Acc.add(a, x)),
        _ => values.iter().fold(T::zero(), |a, &x| NativeAcc.add(a, x)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fp16_accumulation_saturates() {
        let ctx = PrecisionContext::new(FormatName::Fp16_16);
        let v = vec![1000.0f32; 70];
        assert_eq!(accumulate(&v, &ctx), 65504.0);
        let ctx32 = PrecisionContext::new(FormatName::Fp16_32);
        assert_eq!(accumulate(&v, &ctx32), 70000.0);
    }

    #[test]
    fn act_rounding() {
        let ctx = PrecisionContext::new(FormatName::Fp16_16);
        assert_eq!(ctx.round_act(1e6f32), 65504.0);
        assert_eq!(ctx.round_act(-1e6f32), -65504.0);
        assert_eq!(PrecisionContext::native().round_act(0.1f64), 0.1);
        assert_eq!(PrecisionContext::new(FormatName::Tf32).round_act(0.1f64), 0.1f32 as f64);
    }
}
