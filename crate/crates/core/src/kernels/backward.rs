//! Reverse-mode gradients in base precision (training does not emulate
//! reduced formats).

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

use super::conv::upsample_trim;

pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Gradients of the causal dilated convolution with respect to its input,
/// weight and bias.
pub fn conv1d_backward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    grad_output: &Tensor<T>,
    dilation: usize,
) -> Result<ConvGrads<T>> {
    let (cout, cin, k) = check(input, weight, grad_output)?;
    let len = input.dim(1);
    let mut gi = Tensor::zeros(&[cin, len]);
    let mut gw = Tensor::zeros(&[cout, cin, k]);
    let mut gb = Tensor::zeros(&[cout]);
    let w = weight.data();
    for o in 0..cout {
        let g = grad_output.row(o);
        gb.data_mut()[o] = g.iter().copied().sum();
        for kk in 0..k {
            let shift = (k - 1 - kk) * dilation;
            if shift >= len {
                continue;
            }
            let g_s = &g[shift..];
            for i in 0..cin {
                let idx = (o * cin + i) * k + kk;
                let x = &input.row(i)[..len - shift];
                gw.data_mut()[idx] = dot(g_s, x);
                let wv = w[idx];
                if wv != T::zero() {
                    for (gx, &gv) in gi.row_mut(i)[..len - shift].iter_mut().zip(g_s) {
                        *gx += wv * gv;
                    }
                }
            }
        }
    }
    Ok(ConvGrads {
        input: gi,
        weight: gw,
        bias: gb,
    })
}

/// Like [`conv1d_backward`] but only for 1x1 kernels, accumulating into
/// existing gradient buffers and skipping the input gradient when `gi` is
/// `None`.
pub(crate) fn accumulate_pointwise_grads<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    grad_output: &Tensor<T>,
    gw: &mut Tensor<T>,
    gb: Option<&mut Tensor<T>>,
    gi: Option<&mut Tensor<T>>,
) {
    let (cout, cin) = (weight.dim(0), weight.dim(1));
    for o in 0..cout {
        let g = grad_output.row(o);
        for i in 0..cin {
            gw.data_mut()[o * cin + i] += dot(g, input.row(i));
        }
    }
    if let Some(gb) = gb {
        for o in 0..cout {
            gb.data_mut()[o] += grad_output.row(o).iter().copied().sum();
        }
    }
    if let Some(gi) = gi {
        let w = weight.data();
        for o in 0..cout {
            let g = grad_output.row(o);
            for i in 0..cin {
                let wv = w[o * cin + i];
                if wv != T::zero() {
                    for (gx, &gv) in gi.row_mut(i).iter_mut().zip(g) {
                        *gx += wv * gv;
                    }
                }
            }
        }
    }
}

/// Weight and bias gradients of the trimmed transposed convolution.
pub fn conv_transpose1d_backward<T: Scalar>(
    features: &Tensor<T>,
    weight_shape: &[usize],
    grad_output: &Tensor<T>,
    stride: usize,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let (cout, cin, k) = (weight_shape[0], weight_shape[1], weight_shape[2]);
    let frames = features.dim(1);
    if grad_output.shape() != [cout, frames * stride] || features.dim(0) != cin {
        return Err(Error::Shape("transposed conv gradient shapes".into()));
    }
    let (left, _) = upsample_trim(k, stride);
    let out_len = frames * stride;
    let mut gw = Tensor::zeros(weight_shape);
    let mut gb = Tensor::zeros(&[cout]);
    for o in 0..cout {
        let g = grad_output.row(o);
        gb.data_mut()[o] = g.iter().copied().sum();
        for i in 0..cin {
            let x = features.row(i);
            let row = &mut gw.data_mut()[(o * cin + i) * k..(o * cin + i + 1) * k];
            for t in 0..frames {
                let base = t * stride;
                let j0 = left.saturating_sub(base);
                let j1 = k.min(out_len + left - base);
                if j0 >= j1 {
                    continue;
                }
                let n0 = base + j0 - left;
                let xv = x[t];
                for (r, &gv) in row[j0..j1].iter_mut().zip(&g[n0..n0 + (j1 - j0)]) {
                    *r += gv * xv;
                }
            }
        }
    }
    Ok((gw, gb))
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

fn check<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    grad_output: &Tensor<T>,
) -> Result<(usize, usize, usize)> {
    if weight.shape().len() != 3 || input.shape().len() != 2 || grad_output.shape().len() != 2 {
        return Err(Error::Shape("conv backward expects 2-D activations and 3-D weight".into()));
    }
    let (cout, cin, k) = (weight.dim(0), weight.dim(1), weight.dim(2));
    if input.dim(0) != cin || grad_output.dim(0) != cout || grad_output.dim(1) != input.dim(1) {
        return Err(Error::Shape(format!(
            "input {:?}, weight {:?}, grad {:?} are inconsistent",
            input.shape(),
            weight.shape(),
            grad_output.shape()
        )));
    }
    Ok((cout, cin, k))
}
