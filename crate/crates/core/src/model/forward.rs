use std::collections::BTreeMap;

use super::params::{ParamIndex, Parameters};
use crate::error::{Error, Result};
use crate::kernels::{gate, ConvInt8, PrecisionContext, PreparedConv};
use crate::numerics::Int8Calibration;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub(crate) struct PreparedLayer<T> {
    pub dilation: PreparedConv<T>,
    pub cond: PreparedConv<T>,
    pub residual: Option<PreparedConv<T>>,
    pub skip: PreparedConv<T>,
    pub factor: usize,
}

/// Parameters converted to the INP format of one precision context, ready
/// for teacher-forced evaluation or generation.
pub struct PreparedModel<'p, T> {
    pub(crate) params: &'p Parameters<T>,
    pub(crate) ctx: PrecisionContext,
    pub(crate) idx: ParamIndex,
    pub(crate) upsample: PreparedConv<T>,
    pub(crate) layers: Vec<PreparedLayer<T>>,
    pub(crate) out: PreparedConv<T>,
    pub(crate) end: PreparedConv<T>,
}

/// Running max-abs per convolution input site.
#[derive(Debug, Default, Clone)]
pub struct SiteRecorder {
    pub max_abs: BTreeMap<String, f64>,
}

impl SiteRecorder {
    fn record<T: Scalar>(&mut self, site: &str, t: &Tensor<T>) {
        let m = t.max_abs().as_f64();
        let e = self.max_abs.entry(format!("{site}.in")).or_insert(0.0);
        *e = e.max(m);
    }
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    pub prev_codes: Vec<usize>,
    /// Upsampled conditioning, `[mel x 200*frames]`.
    pub cond: Tensor<T>,
    pub layer_inputs: Vec<Tensor<T>>,
    pub pre_gate: Vec<Tensor<T>>,
    pub gated: Vec<Tensor<T>>,
    pub skip_sum: Tensor<T>,
    pub out_pre: Tensor<T>,
}

fn conv_int8(calib: Option<&Int8Calibration>, prefix: &str, bias: bool) -> Result<Option<ConvInt8>> {
    calib.map(|c| c.conv(prefix, bias)).transpose()
}

pub(crate) fn act_add<T: Scalar>(ctx: &PrecisionContext, a: &mut Tensor<T>, b: &Tensor<T>) {
    for (x, &y) in a.data_mut().iter_mut().zip(b.data()) {
        *x = ctx.round_act(*x + y);
    }
}

impl<'p, T: Scalar> PreparedModel<'p, T> {
    pub fn new(
        params: &'p Parameters<T>,
        ctx: &PrecisionContext,
        calib: Option<&Int8Calibration>,
    ) -> Result<Self> {
        if ctx.is_int8() && calib.is_none() {
            return Err(Error::CalibrationRequired(
                "INT8 evaluation needs a calibrated checkpoint".into(),
            ));
        }
        let calib = if ctx.is_int8() { calib } else { None };
        let idx = params.index();
        let t = params.tensors();
        let prep = |w: usize, b: Option<usize>, prefix: &str| -> Result<PreparedConv<T>> {
            let q = conv_int8(calib, prefix, b.is_some())?;
            PreparedConv::new(&t[w], b.map(|b| &t[b]), ctx, q.as_ref())
        };
        let upsample = prep(idx.upsample_w, Some(idx.upsample_b), "upsample")?;
        let mut layers = Vec::with_capacity(idx.layers.len());
        for (i, li) in idx.layers.iter().enumerate() {
            let p = format!("layers.{i}");
            layers.push(PreparedLayer {
                dilation: prep(li.dilation_w, Some(li.dilation_b), &format!("{p}.dilation"))?,
                cond: prep(li.cond_w, Some(li.cond_b), &format!("{p}.conditional"))?,
                residual: li
                    .residual
                    .map(|(w, b)| prep(w, Some(b), &format!("{p}.residual")))
                    .transpose()?,
                skip: prep(li.skip_w, Some(li.skip_b), &format!("{p}.skip"))?,
                factor: params.config().dilation(i),
            });
        }
        let out = prep(idx.out_w, None, "out")?;
        let end = prep(idx.end_w, None, "end")?;
        Ok(Self {
            params,
            ctx: *ctx,
            idx,
            upsample,
            layers,
            out,
            end,
        })
    }

    pub fn context(&self) -> &PrecisionContext {
        &self.ctx
    }

    pub fn params(&self) -> &Parameters<T> {
        self.params
    }

    /// Upsampled conditioning `[mel x stride*frames]` for `features [mel x frames]`.
    pub fn upsample(&self, features: &Tensor<T>) -> Result<Tensor<T>> {
        let cfg = self.params.config();
        if features.shape().len() != 2 || features.dim(0) != cfg.mel_bins {
            return Err(Error::Shape(format!(
                "features {:?} do not have {} bands",
                features.shape(),
                cfg.mel_bins
            )));
        }
        let c = self.upsample.transpose_forward(features, cfg.upsample_stride)?;
        Ok(c.map(|v| self.ctx.round_act(v)))
    }

    /// Embedding rows for `codes`, `[r x T]`.
    pub(crate) fn embed(&self, codes: &[usize]) -> Tensor<T> {
        let emb = &self.params.tensors()[self.idx.embedding];
        let r = emb.dim(1);
        let mut x = Tensor::zeros(&[r, codes.len()]);
        let len = codes.len();
        for (t, &c) in codes.iter().enumerate() {
            let row = emb.row(c);
            for ch in 0..r {
                x.data_mut()[ch * len + t] = self.ctx.round_act(row[ch]);
            }
        }
        x
    }

    pub(crate) fn check_codes(&self, codes: &[usize]) -> Result<()> {
        let a = self.params.config().audio_channels;
        match codes.iter().find(|&&c| c >= a) {
            Some(&c) => Err(Error::CodeOutOfRange {
                code: c as i64,
                channels: a,
            }),
            None => Ok(()),
        }
    }

    /// Teacher-forced logits `[a x T]` where `T = codes.len()`: the input at
    /// time `t` is the code at `t - 1` (silence before the start).
    pub fn forward(&self, features: &Tensor<T>, codes: &[usize]) -> Result<Tensor<T>> {
        self.run(features, codes, None, None)
    }

    pub(crate) fn run(
        &self,
        features: &Tensor<T>,
        codes: &[usize],
        mut rec: Option<&mut SiteRecorder>,
        mut cache: Option<&mut ForwardCache<T>>,
    ) -> Result<Tensor<T>> {
        self.check_codes(codes)?;
        let len = codes.len();
        if len == 0 {
            return Err(Error::InvalidArgument("empty code sequence".into()));
        }
        let cfg = self.params.config();
        if let Some(r) = rec.as_deref_mut() {
            r.record("upsample", features);
        }
        let cond_full = self.upsample(features)?;
        if cond_full.dim(1) < len {
            return Err(Error::Shape(format!(
                "{} conditioning samples cannot cover {} codes",
                cond_full.dim(1),
                len
            )));
        }
        let cond = cond_full.slice_time(0, len);
        let prev: Vec<usize> = std::iter::once(cfg.silence_code())
            .chain(codes[..len - 1].iter().copied())
            .collect();
        let mut x = self.embed(&prev);
        let mut skip_sum: Option<Tensor<T>> = None;
        for (i, layer) in self.layers.iter().enumerate() {
            let p = format!("layers.{i}");
            if let Some(r) = rec.as_deref_mut() {
                r.record(&format!("{p}.dilation"), &x);
                r.record(&format!("{p}.conditional"), &cond);
            }
            let mut h = layer.dilation.forward(&x, layer.factor)?;
            let hc = layer.cond.forward(&cond, 1)?;
            act_add(&self.ctx, &mut h, &hc);
            let z = self.gate_tensor(&h);
            if let Some(r) = rec.as_deref_mut() {
                r.record(&format!("{p}.skip"), &z);
                if layer.residual.is_some() {
                    r.record(&format!("{p}.residual"), &z);
                }
            }
            let s = layer.skip.forward(&z, 1)?;
            match skip_sum.as_mut() {
                None => skip_sum = Some(s),
                Some(acc) => act_add(&self.ctx, acc, &s),
            }
            let next = match &layer.residual {
                Some(res) => {
                    let mut nx = x.clone();
                    act_add(&self.ctx, &mut nx, &res.forward(&z, 1)?);
                    Some(nx)
                }
                None => None,
            };
            if let Some(c) = cache.as_deref_mut() {
                c.layer_inputs.push(x.clone());
                c.pre_gate.push(h);
                c.gated.push(z);
            }
            if let Some(nx) = next {
                x = nx;
            }
        }
        let skip_sum = skip_sum.expect("at least one layer");
        let head_in = crate::kernels::relu(&skip_sum);
        if let Some(r) = rec.as_deref_mut() {
            r.record("out", &head_in);
        }
        let out_pre = self.out.forward(&head_in, 1)?;
        let end_in = crate::kernels::relu(&out_pre);
        if let Some(r) = rec {
            r.record("end", &end_in);
        }
        let logits = self.end.forward(&end_in, 1)?;
        if let Some(c) = cache {
            c.prev_codes = prev;
            c.cond = cond_full;
            c.skip_sum = skip_sum;
            c.out_pre = out_pre;
        }
        Ok(logits)
    }

    fn gate_tensor(&self, h: &Tensor<T>) -> Tensor<T> {
        let (c2, len) = (h.dim(0), h.dim(1));
        let half = c2 / 2;
        let mut z = Tensor::zeros(&[half, len]);
        let d = h.data();
        for (idx, o) in z.data_mut().iter_mut().enumerate() {
            *o = gate(d[idx], d[half * len + idx], &self.ctx);
        }
        z
    }
}

/// Teacher-forced logits `[a x T]` under `ctx`.
pub fn forward_teacher_forced<T: Scalar>(
    params: &Parameters<T>,
    features: &Tensor<T>,
    codes: &[usize],
    ctx: &PrecisionContext,
    calib: Option<&Int8Calibration>,
) -> Result<Tensor<T>> {
    PreparedModel::new(params, ctx, calib)?.forward(features, codes)
}

/// Forward in base precision keeping every activation needed by
/// [`backward`](super::grad::backward).
pub fn forward_with_cache<T: Scalar>(
    params: &Parameters<T>,
    features: &Tensor<T>,
    codes: &[usize],
) -> Result<(Tensor<T>, ForwardCache<T>)> {
    let model = PreparedModel::new(params, &PrecisionContext::native(), None)?;
    let mut cache = ForwardCache {
        prev_codes: Vec::new(),
        cond: Tensor::zeros(&[0]),
        layer_inputs: Vec::new(),
        pre_gate: Vec::new(),
        gated: Vec::new(),
        skip_sum: Tensor::zeros(&[0]),
        out_pre: Tensor::zeros(&[0]),
    };
    let logits = model.run(features, codes, None, Some(&mut cache))?;
    Ok((logits, cache))
}

/// Max-abs of every convolution input over one teacher-forced pass.
pub fn record_sites<T: Scalar>(
    params: &Parameters<T>,
    features: &Tensor<T>,
    codes: &[usize],
    recorder: &mut SiteRecorder,
) -> Result<()> {
    let model = PreparedModel::new(params, &PrecisionContext::default(), None)?;
    model.run(features, codes, Some(recorder), None)?;
    Ok(())
}
