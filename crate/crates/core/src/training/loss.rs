use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

fn check<T: Scalar>(logits: &Tensor<T>, targets: &[usize]) -> Result<(usize, usize)> {
    if logits.shape().len() != 2 || logits.dim(1) != targets.len() {
        return Err(Error::Shape(format!(
            "logits {:?} vs {} targets",
            logits.shape(),
            targets.len()
        )));
    }
    let (a, len) = (logits.dim(0), logits.dim(1));
    if let Some(&bad) = targets.iter().find(|&&c| c >= a) {
        return Err(Error::CodeOutOfRange {
            code: bad as i64,
            channels: a,
        });
    }
    Ok((a, len))
}

/// Log-sum-exp of column `t` of `[a x T]` logits, in f64.
fn column_lse<T: Scalar>(logits: &[T], a: usize, len: usize, t: usize) -> f64 {
    let max = (0..a).map(|c| logits[c * len + t].as_f64()).fold(f64::NEG_INFINITY, f64::max);
    max + (0..a).map(|c| (logits[c * len + t].as_f64() - max).exp()).sum::<f64>().ln()
}

/// Mean over time of `-ln softmax(logits[:, t])[targets[t]]`.
pub fn cross_entropy<T: Scalar>(logits: &Tensor<T>, targets: &[usize]) -> Result<f64> {
    let (a, len) = check(logits, targets)?;
    if len == 0 {
        return Ok(0.0);
    }
    let d = logits.data();
    let total: f64 = targets
        .iter()
        .enumerate()
        .map(|(t, &c)| column_lse(d, a, len, t) - d[c * len + t].as_f64())
        .sum();
    Ok(total / len as f64)
}

/// Cross-entropy and its gradient `(softmax - onehot) / T` at the logits.
pub fn cross_entropy_with_grad<T: Scalar>(logits: &Tensor<T>, targets: &[usize]) -> Result<(f64, Tensor<T>)> {
    let (a, len) = check(logits, targets)?;
    let mut grad = Tensor::zeros(logits.shape());
    if len == 0 {
        return Ok((0.0, grad));
    }
    let d = logits.data();
    let inv = 1.0 / len as f64;
    let mut total = 0.0;
    for (t, &target) in targets.iter().enumerate() {
        let lse = column_lse(d, a, len, t);
        total += lse - d[target * len + t].as_f64();
        for c in 0..a {
            let p = (d[c * len + t].as_f64() - lse).exp();
            let onehot = if c == target { 1.0 } else { 0.0 };
            grad.data_mut()[c * len + t] = T::from_f64_lossy((p - onehot) * inv);
        }
    }
    Ok((total * inv, grad))
}
