//! Round-to-nearest-even into arbitrary (exponent, mantissa) binary formats.

use crate::scalar::Scalar;

/// Exact `2^k` for `k` in the f64 range including subnormals.
pub(crate) fn pow2(k: i32) -> f64 {
    if k >= -1022 {
        f64::from_bits(((k + 1023) as u64) << 52)
    } else {
        // subnormal: single set bit in the fraction
        f64::from_bits(1u64 << (k + 1074))
    }
}

/// `floor(log2(a))` for finite positive `a`.
pub(crate) fn ilog2(a: f64) -> i32 {
    let bits = a.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    if biased == 0 {
        let frac = bits & ((1u64 << 52) - 1);
        -1074 + (63 - frac.leading_zeros() as i32)
    } else {
        biased - 1023
    }
}

pub fn max_finite(exponent_bits: u32, mantissa_bits: u32) -> f64 {
    let emax = (1i32 << (exponent_bits - 1)) - 1;
    (2.0 - pow2(-(mantissa_bits as i32))) * pow2(emax)
}

/// Smallest positive subnormal of the format.
pub fn min_subnormal(exponent_bits: u32, mantissa_bits: u32) -> f64 {
    let emin = 2 - (1i32 << (exponent_bits - 1));
    pow2(emin - mantissa_bits as i32)
}

/// Nearest value of the binary format with `exponent_bits` / `mantissa_bits`
/// (IEEE-style bias, subnormals, infinities). Ties go to even; overflow gives
/// signed infinity; NaN passes through.
pub fn round_float(x: f64, exponent_bits: u32, mantissa_bits: u32) -> f64 {
    assert!((2..=11).contains(&exponent_bits) && mantissa_bits <= 52);
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let bias = (1i32 << (exponent_bits - 1)) - 1;
    let emin = 1 - bias;
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32 - 1023;
    if exp >= emin && exp > -1023 {
        // normal in the target: round the f64 significand in place; a carry
        // out of the fraction bumps the exponent, which is what we want
        let shift = 52 - mantissa_bits;
        if shift == 0 {
            return x;
        }
        let lsb = (bits >> shift) & 1;
        let r = (bits + (1u64 << (shift - 1)) - 1 + lsb) & !((1u64 << shift) - 1);
        let v = f64::from_bits(r);
        return if v.abs() > max_finite(exponent_bits, mantissa_bits) {
            f64::INFINITY.copysign(x)
        } else {
            v
        };
    }
    let a = x.abs();
    let e = ilog2(a).max(emin);
    let quantum = pow2(e - mantissa_bits as i32);
    let r = (a / quantum).round_ties_even() * quantum;
    let r = if r > max_finite(exponent_bits, mantissa_bits) {
        f64::INFINITY
    } else {
        r
    };
    r.copysign(x)
}

#[inline]
pub fn round_scalar<T: Scalar>(x: T, exponent_bits: u32, mantissa_bits: u32) -> T {
    if exponent_bits == 8 && mantissa_bits == 23 {
        return x.round_to_f32();
    }
    T::from_f64_lossy(round_float(x.as_f64(), exponent_bits, mantissa_bits))
}
