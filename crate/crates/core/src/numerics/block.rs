//! Block floating point: blocks of consecutive channel values share one
//! 8-bit exponent; each element keeps sign + 7 magnitude bits.

use super::format::BFP_BLOCK_SIZE;
use super::round::{ilog2, pow2};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Magnitude bits per element (sign stored separately).
pub const BFP_MAGNITUDE_BITS: u32 = 7;
const SHARED_EXP_MIN: i32 = -127;
const SHARED_EXP_MAX: i32 = 127;
const MAX_CODE: f64 = ((1u32 << BFP_MAGNITUDE_BITS) - 1) as f64;

/// Quantize one block in place.
pub fn quantize_block(block: &mut [f64]) {
    let max = block
        .iter()
        .filter(|v| v.is_finite())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        for v in block.iter_mut().filter(|v| v.is_finite()) {
            *v = 0.0f64.copysign(*v);
        }
        return;
    }
    let shared = ilog2(max).clamp(SHARED_EXP_MIN, SHARED_EXP_MAX);
    // the block maximum lands in [64, 128) quanta
    let quantum = pow2(shared - (BFP_MAGNITUDE_BITS as i32 - 1));
    for v in block.iter_mut().filter(|v| v.is_finite()) {
        let code = (v.abs() / quantum).round_ties_even().min(MAX_CODE);
        *v = (code * quantum).copysign(*v);
    }
}

/// Apply block floating point along `channel_axis`, blocking consecutive
/// channels in groups of ten; a trailing partial block is allowed.
pub fn quantize_block_fp<T: Scalar>(t: &Tensor<T>, channel_axis: usize) -> Tensor<T> {
    let shape = t.shape();
    assert!(channel_axis < shape.len(), "channel axis out of range");
    let outer: usize = shape[..channel_axis].iter().product();
    let channels = shape[channel_axis];
    let inner: usize = shape[channel_axis + 1..].iter().product();
    let mut out = t.clone();
    let data = out.data_mut();
    let mut buf = [0.0f64; BFP_BLOCK_SIZE];
    for o in 0..outer {
        for i in 0..inner {
            let idx = |c: usize| (o * channels + c) * inner + i;
            for start in (0..channels).step_by(BFP_BLOCK_SIZE) {
                let len = BFP_BLOCK_SIZE.min(channels - start);
                for k in 0..len {
                    buf[k] = data[idx(start + k)].as_f64();
                }
                quantize_block(&mut buf[..len]);
                for k in 0..len {
                    data[idx(start + k)] = T::from_f64_lossy(buf[k]);
                }
            }
        }
    }
    out
}

/// Number of shared-exponent blocks for a tensor blocked along `channel_axis`.
pub fn block_count(shape: &[usize], channel_axis: usize) -> usize {
    let channels = shape[channel_axis];
    let rest: usize = shape
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != channel_axis)
        .map(|(_, &d)| d)
        .product();
    rest * channels.div_ceil(BFP_BLOCK_SIZE)
}
