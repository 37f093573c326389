//! Causal dilated 1-D convolution and the feature upsampler.

use super::precision::{Accum, F16Acc, F32Acc, NativeAcc, PrecisionContext};
use crate::error::{Error, Result};
use crate::numerics::{quantize_int8_value, ActFormat, IntQuantParams};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Calibrated INT8 scales for one convolution call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvInt8 {
    pub input: IntQuantParams,
    pub weight: IntQuantParams,
    pub bias: Option<IntQuantParams>,
}

/// A convolution with its parameters already converted to the INP format
/// of `ctx`. Converting once lets generation reuse the weights per step.
#[derive(Debug, Clone)]
pub struct PreparedConv<T> {
    ctx: PrecisionContext,
    out_ch: usize,
    in_ch: usize,
    kernel: usize,
    /// `[out, in, kernel]`, INP grid values
    weight: Vec<T>,
    /// INT8 codes of `weight`
    weight_codes: Vec<i64>,
    bias: Option<Vec<T>>,
    int8: Option<ConvInt8>,
}

fn check_weight<T: Scalar>(weight: &Tensor<T>, bias: Option<&Tensor<T>>) -> Result<(usize, usize, usize)> {
    if weight.shape().len() != 3 {
        return Err(Error::Shape(format!(
            "conv weight must be [out, in, kernel], got {:?}",
            weight.shape()
        )));
    }
    let (o, i, k) = (weight.dim(0), weight.dim(1), weight.dim(2));
    if let Some(b) = bias {
        if b.shape() != [o] {
            return Err(Error::Shape(format!(
                "bias shape {:?} does not match {o} output channels",
                b.shape()
            )));
        }
    }
    if o == 0 || i == 0 || k == 0 {
        return Err(Error::Shape("empty convolution weight".into()));
    }
    Ok((o, i, k))
}

impl<T: Scalar> PreparedConv<T> {
    pub fn new(
        weight: &Tensor<T>,
        bias: Option<&Tensor<T>>,
        ctx: &PrecisionContext,
        int8: Option<&ConvInt8>,
    ) -> Result<Self> {
        let (out_ch, in_ch, kernel) = check_weight(weight, bias)?;
        if ctx.is_int8() && int8.is_none() {
            return Err(Error::CalibrationRequired("convolution scales missing".into()));
        }
        let int8 = if ctx.is_int8() { int8.copied() } else { None };
        let (weight_q, codes) = match &int8 {
            Some(q) => {
                let s = q.weight.scale();
                let codes: Vec<i64> = weight
                    .data()
                    .iter()
                    .map(|w| quantize_int8_value(w.as_f64(), s) as i64)
                    .collect();
                let vals = codes.iter().map(|&c| T::from_f64_lossy(c as f64 * s)).collect();
                (vals, codes)
            }
            None => (ctx.quantize_param(weight, None)?.into_data(), Vec::new()),
        };
        let bias = match bias {
            None => None,
            Some(b) => Some(match &int8 {
                Some(q) => {
                    let p = q.bias.ok_or_else(|| {
                        Error::CalibrationRequired("bias scale missing".into())
                    })?;
                    ctx.quantize_param(b, Some(&p))?.into_data()
                }
                None => ctx.quantize_param(b, None)?.into_data(),
            }),
        };
        Ok(Self {
            ctx: *ctx,
            out_ch,
            in_ch,
            kernel,
            weight: weight_q,
            weight_codes: codes,
            bias,
            int8,
        })
    }

    pub fn out_channels(&self) -> usize {
        self.out_ch
    }

    pub fn in_channels(&self) -> usize {
        self.in_ch
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    /// Converted weights, `[out, in, kernel]` row-major.
    pub fn weight(&self) -> &[T] {
        &self.weight
    }

    /// Causal convolution over a whole `[in x T]` sequence.
    pub fn forward(&self, input: &Tensor<T>, dilation: usize) -> Result<Tensor<T>> {
        if dilation < 1 {
            return Err(Error::InvalidArgument("dilation must be >= 1".into()));
        }
        if input.shape().len() != 2 || input.dim(0) != self.in_ch {
            return Err(Error::Shape(format!(
                "conv input {:?} does not have {} channels",
                input.shape(),
                self.in_ch
            )));
        }
        let x = self
            .ctx
            .quantize_activation(input, self.int8.as_ref().map(|q| &q.input))?;
        if let Some(q) = &self.int8 {
            return Ok(self.forward_int8(&x, dilation, q));
        }
        Ok(match self.ctx.act() {
            Some(ActFormat::Fp32) => self.forward_float(&x, dilation, F32Acc),
            Some(ActFormat::Fp16) => self.forward_float(&x, dilation, F16Acc),
            _ => self.forward_float(&x, dilation, NativeAcc),
        })
    }

    fn forward_float<A: Accum<T>>(&self, x: &Tensor<T>, dilation: usize, acc: A) -> Tensor<T> {
        let len = x.dim(1);
        let mut out = Tensor::zeros(&[self.out_ch, len]);
        for o in 0..self.out_ch {
            let row = out.row_mut(o);
            for k in 0..self.kernel {
                let shift = (self.kernel - 1 - k) * dilation;
                if shift >= len {
                    continue;
                }
                for i in 0..self.in_ch {
                    let w = self.weight[(o * self.in_ch + i) * self.kernel + k];
                    let xr = &x.row(i)[..len - shift];
                    for (r, &xv) in row[shift..].iter_mut().zip(xr) {
                        *r = acc.mac(*r, w, xv);
                    }
                }
            }
            if let Some(b) = &self.bias {
                for r in row.iter_mut() {
                    *r = acc.add(*r, b[o]);
                }
            }
        }
        out
    }

    fn forward_int8(&self, x: &Tensor<T>, dilation: usize, q: &ConvInt8) -> Tensor<T> {
        let len = x.dim(1);
        let sx = q.input.scale();
        let xs: Vec<i64> = x
            .data()
            .iter()
            .map(|v| (v.as_f64() / sx).round_ties_even() as i64)
            .collect();
        let mut out = Tensor::zeros(&[self.out_ch, len]);
        let mut acc = vec![0i64; len];
        for o in 0..self.out_ch {
            acc.iter_mut().for_each(|a| *a = 0);
            for k in 0..self.kernel {
                let shift = (self.kernel - 1 - k) * dilation;
                if shift >= len {
                    continue;
                }
                for i in 0..self.in_ch {
                    let w = self.weight_codes[(o * self.in_ch + i) * self.kernel + k];
                    let xr = &xs[i * len..i * len + len - shift];
                    for (a, &xv) in acc[shift..].iter_mut().zip(xr) {
                        *a += w * xv;
                    }
                }
            }
            let row = out.row_mut(o);
            self.finish_int8(&acc, o, q, row);
        }
        out
    }

    fn finish_int8(&self, acc: &[i64], o: usize, q: &ConvInt8, out: &mut [T]) {
        let s = q.input.scale() * q.weight.scale();
        let b = self.bias.as_ref().map_or(0.0, |b| b[o].as_f64());
        for (r, &a) in out.iter_mut().zip(acc) {
            *r = T::from_f64_lossy(a as f64 * s + b);
        }
    }

    /// One output column from per-tap input columns; `taps[k]` is the input
    /// at time `t - (kernel - 1 - k) * dilation` (zeros before the start).
    /// Matches one column of [`forward`](Self::forward) exactly.
    pub fn step(&self, taps: &[&[T]]) -> Result<Vec<T>> {
        if taps.len() != self.kernel || taps.iter().any(|c| c.len() != self.in_ch) {
            return Err(Error::Shape("step taps do not match the kernel".into()));
        }
        let site = self.int8.as_ref().map(|q| &q.input);
        let cols: Vec<Vec<T>> = taps
            .iter()
            .map(|c| self.ctx.quantize_column(c, site))
            .collect::<Result<_>>()?;
        if let Some(q) = &self.int8 {
            let sx = q.input.scale();
            let mut out = vec![T::zero(); self.out_ch];
            for o in 0..self.out_ch {
                let mut a = 0i64;
                for (k, col) in cols.iter().enumerate() {
                    for (i, v) in col.iter().enumerate() {
                        let xv = (v.as_f64() / sx).round_ties_even() as i64;
                        a += self.weight_codes[(o * self.in_ch + i) * self.kernel + k] * xv;
                    }
                }
                self.finish_int8(&[a], o, q, &mut out[o..o + 1]);
            }
            return Ok(out);
        }
        Ok(match self.ctx.act() {
            Some(ActFormat::Fp32) => self.step_float(&cols, F32Acc),
            Some(ActFormat::Fp16) => self.step_float(&cols, F16Acc),
            _ => self.step_float(&cols, NativeAcc),
        })
    }

    fn step_float<A: Accum<T>>(&self, cols: &[Vec<T>], acc: A) -> Vec<T> {
        (0..self.out_ch)
            .map(|o| {
                let mut r = T::zero();
                for (k, col) in cols.iter().enumerate() {
                    for (i, &xv) in col.iter().enumerate() {
                        r = acc.mac(r, self.weight[(o * self.in_ch + i) * self.kernel + k], xv);
                    }
                }
                if let Some(b) = &self.bias {
                    r = acc.add(r, b[o]);
                }
                r
            })
            .collect()
    }
}

/// Causal dilated convolution: `input [in x T]`, `weight [out x in x K]`,
/// left zero padding of `(K - 1) * dilation`, output `[out x T]`.
pub fn conv1d<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: Option<&Tensor<T>>,
    dilation: usize,
    ctx: &PrecisionContext,
    int8: Option<&ConvInt8>,
) -> Result<Tensor<T>> {
    PreparedConv::new(weight, bias, ctx, int8)?.forward(input, dilation)
}

/// Left/right trim applied to the raw transposed-convolution output so that
/// `frames` inputs give exactly `stride * frames` outputs.
pub fn upsample_trim(kernel: usize, stride: usize) -> (usize, usize) {
    let extra = kernel.saturating_sub(stride);
    (extra / 2, extra - extra / 2)
}

/// Transposed convolution `features [in x T] -> [out x stride*T]`, center
/// trimmed. `weight` is `[out x in x K]`; output `n` (untrimmed) receives
/// `w[o, i, j] * x[i, t]` for every `n = t * stride + j`.
pub fn conv_transpose1d<T: Scalar>(
    features: &Tensor<T>,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
    ctx: &PrecisionContext,
    int8: Option<&ConvInt8>,
) -> Result<Tensor<T>> {
    let prepared = PreparedConv::new(weight, Some(bias), ctx, int8)?;
    prepared.transpose_forward(features, stride)
}

impl<T: Scalar> PreparedConv<T> {
    pub fn transpose_forward(&self, features: &Tensor<T>, stride: usize) -> Result<Tensor<T>> {
        if features.shape().len() != 2 || features.dim(0) != self.in_ch {
            return Err(Error::Shape(format!(
                "upsampler input {:?} does not have {} channels",
                features.shape(),
                self.in_ch
            )));
        }
        let frames = features.dim(1);
        if frames == 0 {
            return Err(Error::InvalidArgument("upsampler needs at least one frame".into()));
        }
        if stride == 0 || self.kernel < stride {
            return Err(Error::InvalidArgument("stride must be in 1..=kernel".into()));
        }
        let x = self
            .ctx
            .quantize_activation(features, self.int8.as_ref().map(|q| &q.input))?;
        if let Some(q) = &self.int8 {
            return Ok(self.transpose_int8(&x, stride, q));
        }
        Ok(match self.ctx.act() {
            Some(ActFormat::Fp32) => self.transpose_float(&x, stride, F32Acc),
            Some(ActFormat::Fp16) => self.transpose_float(&x, stride, F16Acc),
            _ => self.transpose_float(&x, stride, NativeAcc),
        })
    }

    /// Visit `(t, j0, j1, n0)`: frame `t` contributes kernel taps `j0..j1`
    /// to trimmed outputs starting at `n0`.
    fn transpose_spans(&self, frames: usize, stride: usize, mut f: impl FnMut(usize, usize, usize, usize)) {
        let (left, _) = upsample_trim(self.kernel, stride);
        let out_len = frames * stride;
        for t in 0..frames {
            let base = t * stride;
            // raw index base + j maps to trimmed index base + j - left
            let j0 = left.saturating_sub(base);
            let j1 = self.kernel.min(out_len + left - base);
            if j0 < j1 {
                f(t, j0, j1, base + j0 - left);
            }
        }
    }

    fn transpose_float<A: Accum<T>>(&self, x: &Tensor<T>, stride: usize, acc: A) -> Tensor<T> {
        let frames = x.dim(1);
        let mut out = Tensor::zeros(&[self.out_ch, frames * stride]);
        let k = self.kernel;
        for o in 0..self.out_ch {
            let row = out.row_mut(o);
            for i in 0..self.in_ch {
                let w = &self.weight[(o * self.in_ch + i) * k..(o * self.in_ch + i + 1) * k];
                let xr = x.row(i);
                self.transpose_spans(frames, stride, |t, j0, j1, n0| {
                    let xv = xr[t];
                    for (r, &wv) in row[n0..n0 + (j1 - j0)].iter_mut().zip(&w[j0..j1]) {
                        *r = acc.mac(*r, wv, xv);
                    }
                });
            }
            if let Some(b) = &self.bias {
                for r in row.iter_mut() {
                    *r = acc.add(*r, b[o]);
                }
            }
        }
        out
    }

    fn transpose_int8(&self, x: &Tensor<T>, stride: usize, q: &ConvInt8) -> Tensor<T> {
        let frames = x.dim(1);
        let sx = q.input.scale();
        let k = self.kernel;
        let mut out = Tensor::zeros(&[self.out_ch, frames * stride]);
        let mut acc = vec![0i64; frames * stride];
        for o in 0..self.out_ch {
            acc.iter_mut().for_each(|a| *a = 0);
            for i in 0..self.in_ch {
                let w = &self.weight_codes[(o * self.in_ch + i) * k..(o * self.in_ch + i + 1) * k];
                let xr = x.row(i);
                self.transpose_spans(frames, stride, |t, j0, j1, n0| {
                    let xv = (xr[t].as_f64() / sx).round_ties_even() as i64;
                    for (a, &wv) in acc[n0..n0 + (j1 - j0)].iter_mut().zip(&w[j0..j1]) {
                        *a += wv * xv;
                    }
                });
            }
            self.finish_int8(&acc, o, q, out.row_mut(o));
        }
        out
    }
}
