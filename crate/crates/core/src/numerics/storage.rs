//! Storage cost per value, used by the compression accounting.

use num_rational::Ratio;

use super::block::block_count;
use super::format::{FormatKind, FormatName, FormatSpec};

/// Channel axis used when storing a parameter: input channels for 2-D/3-D
/// weights (`[out, in, ..]` and `[rows, channels]`), the only axis for 1-D.
pub fn storage_channel_axis(shape: &[usize]) -> usize {
    if shape.len() >= 2 {
        1
    } else {
        0
    }
}

/// Bits per stored value. TF32 counts 1 + 8 + 10 = 19 bits; BFP16 counts 8
/// bits per element plus one 8-bit exponent per (possibly partial) block.
pub fn bits_per_value(f: &FormatSpec, shape: &[usize]) -> Ratio<u64> {
    match f.kind {
        FormatKind::Floating => Ratio::from_integer(match f.name {
            FormatName::Fp32 => 32,
            FormatName::Tf32 => 1 + f.exponent_bits as u64 + f.mantissa_bits as u64,
            _ => 1 + f.exponent_bits as u64 + f.mantissa_bits as u64,
        }),
        FormatKind::Integer => Ratio::from_integer(8),
        FormatKind::BlockFloating => {
            let numel: usize = shape.iter().product();
            if numel == 0 {
                return Ratio::from_integer(8);
            }
            let blocks = block_count(shape, storage_channel_axis(shape)) as u64;
            Ratio::new(8 * blocks + 8 * numel as u64, numel as u64)
        }
    }
}

/// Total bits for `stored` values of a tensor with dense shape `shape`.
pub fn stored_bits(f: &FormatSpec, shape: &[usize], stored: usize) -> Ratio<u64> {
    bits_per_value(f, shape) * Ratio::from_integer(stored as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bpv(name: FormatName, shape: &[usize]) -> f64 {
        let r = bits_per_value(&name.spec(), shape);
        *r.numer() as f64 / *r.denom() as f64
    }

    #[test]
    fn fixed_widths() {
        assert_eq!(bpv(FormatName::Fp32, &[7]), 32.0);
        assert_eq!(bpv(FormatName::Tf32, &[7]), 19.0);
        assert_eq!(bpv(FormatName::Bf16, &[7]), 16.0);
        assert_eq!(bpv(FormatName::Fp16_16, &[7]), 16.0);
        assert_eq!(bpv(FormatName::Fp16_32, &[7]), 16.0);
        assert_eq!(bpv(FormatName::Int8, &[7]), 8.0);
    }

    #[test]
    fn bfp_full_and_partial() {
        assert_eq!(bits_per_value(&FormatName::Bfp16.spec(), &[4, 120, 2]), Ratio::new(44, 5));
        assert_eq!(bpv(FormatName::Bfp16, &[120]), 8.8);
        // 256 channels: 26 blocks per row
        assert_eq!(
            bits_per_value(&FormatName::Bfp16.spec(), &[256, 256, 1]),
            Ratio::new(8 * 26 + 8 * 256, 256)
        );
        assert!(bpv(FormatName::Bfp16, &[256]) > 8.8);
    }

    #[test]
    fn tf32_ratio() {
        assert!((32.0 / bpv(FormatName::Tf32, &[1]) - 1.68).abs() < 0.005);
    }
}
