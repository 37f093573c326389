use rand::Rng;

use super::precision::PrecisionContext;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// `tanh(a) * sigmoid(b)` where `a` is the first half of the channels and
/// `b` the second. Nonlinearities are evaluated in base precision on ACT
/// inputs and their results rounded back to ACT.
pub fn gated_unit<T: Scalar>(pre: &Tensor<T>, ctx: &PrecisionContext) -> Result<Tensor<T>> {
    if pre.shape().len() != 2 || !pre.dim(0).is_multiple_of(2) {
        return Err(Error::Shape(format!(
            "gated unit needs an even channel count, got {:?}",
            pre.shape()
        )));
    }
    let (c2, len) = (pre.dim(0), pre.dim(1));
    let half = c2 / 2;
    let mut out = Tensor::zeros(&[half, len]);
    let data = pre.data();
    for (idx, o) in out.data_mut().iter_mut().enumerate() {
        *o = gate(data[idx], data[half * len + idx], ctx);
    }
    Ok(out)
}

#[inline]
pub(crate) fn gate<T: Scalar>(a: T, b: T, ctx: &PrecisionContext) -> T {
    let ta = ctx.round_act(ctx.round_act(a).tanh());
    let sb = ctx.round_act(sigmoid(ctx.round_act(b)));
    ctx.round_act(ta * sb)
}

pub fn relu<T: Scalar>(t: &Tensor<T>) -> Tensor<T> {
    t.map(|x| x.max(T::zero()))
}

/// Numerically stable softmax evaluated in ACT precision.
pub fn softmax<T: Scalar>(logits: &[T], ctx: &PrecisionContext) -> Result<Vec<T>> {
    if logits.is_empty() || logits.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("softmax needs non-NaN logits".into()));
    }
    let max = logits.iter().fold(T::neg_infinity(), |m, &x| m.max(x));
    if max == T::neg_infinity() {
        return Err(Error::InvalidArgument("all logits are -inf".into()));
    }
    let exps: Vec<T> = logits
        .iter()
        .map(|&x| ctx.round_act(ctx.round_act(x - max).exp()))
        .collect();
    let sum = super::precision::accumulate(&exps, ctx);
    Ok(exps.iter().map(|&e| ctx.round_act(e / sum)).collect())
}

/// Draw a code from `softmax(logits)` using `rng`.
pub fn softmax_sample<T: Scalar, R: Rng + ?Sized>(
    logits: &[T],
    rng: &mut R,
    ctx: &PrecisionContext,
) -> Result<usize> {
    let probs = softmax(logits, ctx)?;
    let u: f64 = rng.gen();
    let total: f64 = probs.iter().map(|p| p.as_f64()).sum();
    let target = u * total;
    let mut cum = 0.0;
    let mut last = 0;
    for (i, p) in probs.iter().enumerate() {
        let p = p.as_f64();
        if p > 0.0 {
            cum += p;
            last = i;
            if target < cum {
                return Ok(i);
            }
        }
    }
    Ok(last)
}
