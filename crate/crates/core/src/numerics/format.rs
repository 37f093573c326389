use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The seven evaluated numeric formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FormatName {
    #[serde(rename = "FP32")]
    Fp32,
    #[serde(rename = "TF32")]
    Tf32,
    #[serde(rename = "bfloat16")]
    Bf16,
    #[serde(rename = "BFP16")]
    Bfp16,
    #[serde(rename = "FP16.16")]
    Fp16_16,
    #[serde(rename = "FP16.32")]
    Fp16_32,
    #[serde(rename = "INT8")]
    Int8,
}

impl FormatName {
    pub const ALL: [FormatName; 7] = [
        FormatName::Fp32,
        FormatName::Tf32,
        FormatName::Bf16,
        FormatName::Bfp16,
        FormatName::Fp16_16,
        FormatName::Fp16_32,
        FormatName::Int8,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FormatName::Fp32 => "FP32",
            FormatName::Tf32 => "TF32",
            FormatName::Bf16 => "bfloat16",
            FormatName::Bfp16 => "BFP16",
            FormatName::Fp16_16 => "FP16.16",
            FormatName::Fp16_32 => "FP16.32",
            FormatName::Int8 => "INT8",
        }
    }

    pub fn spec(self) -> FormatSpec {
        FormatSpec::of(self)
    }
}

impl fmt::Display for FormatName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for FormatName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase();
        let name = match norm.as_str() {
            "fp32" | "binary32" => FormatName::Fp32,
            "tf32" => FormatName::Tf32,
            "bfloat16" | "bf16" => FormatName::Bf16,
            "bfp16" => FormatName::Bfp16,
            "fp16.16" | "fp16_16" => FormatName::Fp16_16,
            "fp16.32" | "fp16_32" => FormatName::Fp16_32,
            "int8" => FormatName::Int8,
            _ => return Err(Error::InvalidArgument(format!("unknown format `{s}`"))),
        };
        Ok(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FormatKind {
    Floating,
    BlockFloating,
    Integer,
}

/// Format used for sums and activation functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActFormat {
    Fp32,
    Fp16,
    Int8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatSpec {
    pub name: FormatName,
    pub kind: FormatKind,
    pub exponent_bits: u32,
    pub mantissa_bits: u32,
    pub accumulation: ActFormat,
    pub block_size: Option<usize>,
}

/// Shared-exponent block length for BFP16.
pub const BFP_BLOCK_SIZE: usize = 10;

impl FormatSpec {
    pub const fn of(name: FormatName) -> Self {
        use FormatKind::*;
        let (kind, e, m, acc, block) = match name {
            FormatName::Fp32 => (Floating, 8, 23, ActFormat::Fp32, None),
            FormatName::Tf32 => (Floating, 8, 10, ActFormat::Fp32, None),
            FormatName::Bf16 => (Floating, 8, 7, ActFormat::Fp32, None),
            FormatName::Bfp16 => (BlockFloating, 8, 7, ActFormat::Fp32, Some(BFP_BLOCK_SIZE)),
            FormatName::Fp16_16 => (Floating, 5, 10, ActFormat::Fp16, None),
            FormatName::Fp16_32 => (Floating, 5, 10, ActFormat::Fp32, None),
            FormatName::Int8 => (Integer, 0, 8, ActFormat::Int8, None),
        };
        FormatSpec {
            name,
            kind,
            exponent_bits: e,
            mantissa_bits: m,
            accumulation: acc,
            block_size: block,
        }
    }

    pub fn all() -> [FormatSpec; 7] {
        FormatName::ALL.map(FormatSpec::of)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        let rows: Vec<_> = FormatSpec::all()
            .iter()
            .map(|f| (f.name.label(), f.exponent_bits, f.mantissa_bits, f.accumulation))
            .collect();
        assert_eq!(
            rows,
            vec![
                ("FP32", 8, 23, ActFormat::Fp32),
                ("TF32", 8, 10, ActFormat::Fp32),
                ("bfloat16", 8, 7, ActFormat::Fp32),
                ("BFP16", 8, 7, ActFormat::Fp32),
                ("FP16.16", 5, 10, ActFormat::Fp16),
                ("FP16.32", 5, 10, ActFormat::Fp32),
                ("INT8", 0, 8, ActFormat::Int8),
            ]
        );
        assert_eq!(FormatSpec::of(FormatName::Bfp16).block_size, Some(10));
    }

    #[test]
    fn parse_labels() {
        for name in FormatName::ALL {
            assert_eq!(name.label().parse::<FormatName>().unwrap(), name);
        }
        assert!("int4".parse::<FormatName>().is_err());
    }
}
