//! Minimal dense row-major tensor (last axis fastest).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![T::zero(); n],
        }
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Shape(format!(
                "shape {:?} needs {} elements, got {}",
                shape,
                n,
                data.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Size of axis `i`; panics when out of range.
    pub fn dim(&self, i: usize) -> usize {
        self.shape[i]
    }

    /// Row `r` of a 2-D tensor.
    pub fn row(&self, r: usize) -> &[T] {
        let w = self.shape[self.shape.len() - 1];
        &self.data[r * w..(r + 1) * w]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        let w = self.shape[self.shape.len() - 1];
        &mut self.data[r * w..(r + 1) * w]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| U::from_f64_lossy(x.as_f64())).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// Columns `start..end` of a 2-D `[C x T]` tensor.
    pub fn slice_time(&self, start: usize, end: usize) -> Self {
        let (c, t) = (self.shape[0], self.shape[1]);
        assert!(start <= end && end <= t);
        let mut data = Vec::with_capacity(c * (end - start));
        for ch in 0..c {
            data.extend_from_slice(&self.data[ch * t + start..ch * t + end]);
        }
        Self {
            shape: vec![c, end - start],
            data,
        }
    }

    /// Column `t` of a 2-D `[C x T]` tensor.
    pub fn column(&self, t: usize) -> Vec<T> {
        let (c, len) = (self.shape[0], self.shape[1]);
        (0..c).map(|ch| self.data[ch * len + t]).collect()
    }
}
