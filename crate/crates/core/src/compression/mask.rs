use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Size of a balanced-sparsity group.
pub const GROUP: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaskScheme {
    #[serde(rename = "unstructured")]
    Unstructured,
    #[serde(rename = "2:4")]
    Balanced2of4,
}

impl fmt::Display for MaskScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaskScheme::Unstructured => "unstructured",
            MaskScheme::Balanced2of4 => "2:4",
        })
    }
}

impl FromStr for MaskScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unstructured" | "iterative" => Ok(MaskScheme::Unstructured),
            "2:4" | "balanced" => Ok(MaskScheme::Balanced2of4),
            _ => Err(Error::InvalidArgument(format!("unknown mask scheme `{s}`"))),
        }
    }
}

/// Keep/drop bitmap for one tensor (`true` = keep).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    owner: String,
    scheme: MaskScheme,
    shape: Vec<usize>,
    keep: Vec<bool>,
}

/// A balanced group whose kept count is wrong.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupViolation {
    pub row: usize,
    pub group: usize,
    pub kept: usize,
    pub expected: usize,
}

impl Mask {
    pub fn new(owner: impl Into<String>, scheme: MaskScheme, shape: &[usize], keep: Vec<bool>) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if keep.len() != numel {
            return Err(Error::Shape(format!(
                "mask of {} bits for shape {shape:?}",
                keep.len()
            )));
        }
        Ok(Self {
            owner: owner.into(),
            scheme,
            shape: shape.to_vec(),
            keep,
        })
    }

    pub fn ones(owner: impl Into<String>, scheme: MaskScheme, shape: &[usize]) -> Self {
        let numel = shape.iter().product();
        Self {
            owner: owner.into(),
            scheme,
            shape: shape.to_vec(),
            keep: vec![true; numel],
        }
    }

    pub fn owner(&self) -> &str {
        &self.owner
    }

    pub fn scheme(&self) -> MaskScheme {
        self.scheme
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn bits(&self) -> &[bool] {
        &self.keep
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.keep
    }

    pub fn numel(&self) -> usize {
        self.keep.len()
    }

    pub fn popcount(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }

    pub fn sparsity(&self) -> f64 {
        if self.keep.is_empty() {
            return 0.0;
        }
        1.0 - self.popcount() as f64 / self.numel() as f64
    }

    /// Zero every dropped entry of `t`.
    pub fn apply<T: Scalar>(&self, t: &mut Tensor<T>) -> Result<()> {
        if t.shape() != self.shape.as_slice() {
            return Err(Error::Shape(format!(
                "mask `{}` has shape {:?}, tensor {:?}",
                self.owner,
                self.shape,
                t.shape()
            )));
        }
        for (v, &k) in t.data_mut().iter_mut().zip(&self.keep) {
            if !k {
                *v = T::zero();
            }
        }
        Ok(())
    }

    /// Length of the per-output-channel reduction axis (in x kernel).
    pub fn row_len(&self) -> usize {
        if self.shape.is_empty() || self.shape[0] == 0 {
            return self.numel();
        }
        self.numel() / self.shape[0]
    }

    /// Groups violating the 2-of-4 rule (empty for a valid balanced mask).
    pub fn group_violations(&self) -> Vec<GroupViolation> {
        let row_len = self.row_len();
        if row_len == 0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for (row, bits) in self.keep.chunks(row_len).enumerate() {
            for (group, g) in bits.chunks(GROUP).enumerate() {
                let kept = g.iter().filter(|&&k| k).count();
                let expected = balanced_keep(g.len());
                if kept != expected {
                    out.push(GroupViolation {
                        row,
                        group,
                        kept,
                        expected,
                    });
                }
            }
        }
        out
    }

    /// LSB-first packed bitmap.
    pub fn pack(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.keep.len().div_ceil(8)];
        for (i, &k) in self.keep.iter().enumerate() {
            if k {
                out[i / 8] |= 1 << (i % 8);
            }
        }
        out
    }

    pub fn unpack(owner: impl Into<String>, scheme: MaskScheme, shape: &[usize], bytes: &[u8]) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if bytes.len() != numel.div_ceil(8) {
            return Err(Error::Shape(format!(
                "packed mask has {} bytes, shape {shape:?} needs {}",
                bytes.len(),
                numel.div_ceil(8)
            )));
        }
        let keep = (0..numel).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect();
        Self::new(owner, scheme, shape, keep)
    }
}

/// Entries kept in a balanced group of `len` (2 for a full group).
pub fn balanced_keep(len: usize) -> usize {
    len.div_ceil(2)
}

/// Masks keyed by owner tensor name.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MaskSet(BTreeMap<String, Mask>);

impl MaskSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, mask: Mask) {
        self.0.insert(mask.owner.clone(), mask);
    }

    pub fn get(&self, owner: &str) -> Option<&Mask> {
        self.0.get(owner)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Mask> {
        self.0.values()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Kept entries for `owner`, or `None` when it has no mask.
    pub fn kept(&self, owner: &str) -> Option<usize> {
        self.get(owner).map(Mask::popcount)
    }

    /// Zero dropped weights in every masked tensor.
    pub fn apply<T: Scalar>(&self, params: &mut crate::model::Parameters<T>) -> Result<()> {
        for m in self.iter() {
            let t = params
                .get_mut(&m.owner)
                .ok_or_else(|| Error::Shape(format!("mask for unknown tensor `{}`", m.owner)))?;
            m.apply(t)?;
        }
        Ok(())
    }
}

impl FromIterator<Mask> for MaskSet {
    fn from_iter<I: IntoIterator<Item = Mask>>(iter: I) -> Self {
        let mut s = Self::new();
        for m in iter {
            s.insert(m);
        }
        s
    }
}
