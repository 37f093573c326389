//! Scalar abstraction shared by the kernels, model and training loop.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Base-precision real used to carry tensor data: `f32` or `f64`.
///
/// Emulated formats are applied on top of this type; `f64` is only needed
/// where finite-difference checks want the headroom.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Round to the nearest `f32` (identity for `f32`).
    fn round_to_f32(self) -> Self;

    fn from_f64_lossy(x: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    #[inline(always)]
    fn round_to_f32(self) -> Self {
        self
    }

    #[inline(always)]
    fn from_f64_lossy(x: f64) -> Self {
        x as f32
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline(always)]
    fn round_to_f32(self) -> Self {
        self as f32 as f64
    }

    #[inline(always)]
    fn from_f64_lossy(x: f64) -> Self {
        x
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self
    }
}

