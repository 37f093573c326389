//! Reverse-mode gradients of the whole network (base precision).

use super::forward::{forward_with_cache, ForwardCache};
use super::params::Parameters;
use crate::error::Result;
use crate::kernels::{
    accumulate_pointwise_grads, conv1d_backward, conv_transpose1d_backward, sigmoid,
};
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use crate::training::cross_entropy_with_grad;

/// Gradient of the loss with respect to every parameter, given the gradient
/// at the logits and the cached forward activations.
pub fn backward<T: Scalar>(
    params: &Parameters<T>,
    features: &Tensor<T>,
    cache: &ForwardCache<T>,
    d_logits: &Tensor<T>,
) -> Result<Parameters<T>> {
    let cfg = params.config();
    let idx = params.index();
    let mut grads = Parameters::zeros(cfg)?;
    let w = params.tensors();
    let len = d_logits.dim(1);

    let end_in = crate::kernels::relu(&cache.out_pre);
    let mut d_end_in = Tensor::zeros(end_in.shape());
    accumulate_pointwise_grads(
        &end_in,
        &w[idx.end_w],
        d_logits,
        &mut grads.tensors_mut()[idx.end_w],
        None,
        Some(&mut d_end_in),
    );
    let d_out_pre = relu_backward(&cache.out_pre, &d_end_in);

    let head_in = crate::kernels::relu(&cache.skip_sum);
    let mut d_head = Tensor::zeros(head_in.shape());
    accumulate_pointwise_grads(
        &head_in,
        &w[idx.out_w],
        &d_out_pre,
        &mut grads.tensors_mut()[idx.out_w],
        None,
        Some(&mut d_head),
    );
    let d_skip = relu_backward(&cache.skip_sum, &d_head);

    let r = cfg.residual_channels;
    let mut dx = Tensor::zeros(&[r, len]);
    let mut d_cond = Tensor::zeros(&[cfg.mel_bins, len]);
    let cond = cache.cond.slice_time(0, len);
    for (i, li) in idx.layers.iter().enumerate().rev() {
        let z = &cache.gated[i];
        let mut dz = Tensor::zeros(z.shape());
        {
            let g = grads.tensors_mut();
            let (gw, gb) = pair_mut(g, li.skip_w, li.skip_b);
            accumulate_pointwise_grads(z, &w[li.skip_w], &d_skip, gw, Some(gb), Some(&mut dz));
        }
        if let Some((rw, rb)) = li.residual {
            let g = grads.tensors_mut();
            let (gw, gb) = pair_mut(g, rw, rb);
            accumulate_pointwise_grads(z, &w[rw], &dx, gw, Some(gb), Some(&mut dz));
        }
        let dh = gate_backward(&cache.pre_gate[i], &dz);
        let dil = conv1d_backward(&cache.layer_inputs[i], &w[li.dilation_w], &dh, cfg.dilation(i))?;
        add_assign(&mut grads.tensors_mut()[li.dilation_w], &dil.weight);
        add_assign(&mut grads.tensors_mut()[li.dilation_b], &dil.bias);
        add_assign(&mut dx, &dil.input);
        let g = grads.tensors_mut();
        let (gw, gb) = pair_mut(g, li.cond_w, li.cond_b);
        accumulate_pointwise_grads(&cond, &w[li.cond_w], &dh, gw, Some(gb), Some(&mut d_cond));
    }

    let emb_grad = &mut grads.tensors_mut()[idx.embedding];
    for (t, &code) in cache.prev_codes.iter().enumerate() {
        for ch in 0..r {
            let v = dx.data()[ch * len + t];
            emb_grad.row_mut(code)[ch] += v;
        }
    }

    let full = cache.cond.dim(1);
    let d_cond_full = if full == len {
        d_cond
    } else {
        let mut padded = Tensor::zeros(&[cfg.mel_bins, full]);
        for ch in 0..cfg.mel_bins {
            padded.row_mut(ch)[..len].copy_from_slice(d_cond.row(ch));
        }
        padded
    };
    let (gw, gb) = conv_transpose1d_backward(
        features,
        w[idx.upsample_w].shape(),
        &d_cond_full,
        cfg.upsample_stride,
    )?;
    add_assign(&mut grads.tensors_mut()[idx.upsample_w], &gw);
    add_assign(&mut grads.tensors_mut()[idx.upsample_b], &gb);
    Ok(grads)
}

/// Mean teacher-forced cross-entropy over `codes` and its parameter gradient.
pub fn loss_and_grad<T: Scalar>(
    params: &Parameters<T>,
    features: &Tensor<T>,
    codes: &[usize],
) -> Result<(f64, Parameters<T>)> {
    let (logits, cache) = forward_with_cache(params, features, codes)?;
    let (loss, d_logits) = cross_entropy_with_grad(&logits, codes)?;
    let grads = backward(params, features, &cache, &d_logits)?;
    Ok((loss, grads))
}

fn relu_backward<T: Scalar>(pre: &Tensor<T>, grad: &Tensor<T>) -> Tensor<T> {
    let data = pre
        .data()
        .iter()
        .zip(grad.data())
        .map(|(&p, &g)| if p > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::from_vec(pre.shape(), data).expect("same shape")
}

fn gate_backward<T: Scalar>(pre: &Tensor<T>, dz: &Tensor<T>) -> Tensor<T> {
    let (c2, len) = (pre.dim(0), pre.dim(1));
    let half = c2 / 2;
    let mut dh = Tensor::zeros(&[c2, len]);
    let p = pre.data();
    let one = T::one();
    for idx in 0..half * len {
        let ta = p[idx].tanh();
        let sb = sigmoid(p[half * len + idx]);
        let g = dz.data()[idx];
        dh.data_mut()[idx] = g * sb * (one - ta * ta);
        dh.data_mut()[half * len + idx] = g * ta * sb * (one - sb);
    }
    dh
}

fn add_assign<T: Scalar>(a: &mut Tensor<T>, b: &Tensor<T>) {
    for (x, &y) in a.data_mut().iter_mut().zip(b.data()) {
        *x += y;
    }
}

fn pair_mut<T>(v: &mut [T], a: usize, b: usize) -> (&mut T, &mut T) {
    assert!(a < b);
    let (lo, hi) = v.split_at_mut(b);
    (&mut lo[a], &mut hi[0])
}
