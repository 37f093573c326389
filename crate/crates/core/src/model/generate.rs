//! Autoregressive generation with per-layer ring buffers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::forward::PreparedModel;
use super::params::Parameters;
use crate::audio_io::{mulaw_decode_channels, AudioClip};
use crate::error::{Error, Result};
use crate::kernels::{gate, softmax_sample, PrecisionContext};
use crate::numerics::Int8Calibration;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Fixed-capacity history of one layer's past inputs; with capacity equal
/// to the dilation, the oldest entry is the input `dilation` steps back.
#[derive(Debug, Clone)]
pub struct RingBuffer<T> {
    cols: Vec<Vec<T>>,
    head: usize,
    filled: usize,
}

impl<T: Scalar> RingBuffer<T> {
    pub fn new(capacity: usize, channels: usize) -> Self {
        Self {
            cols: vec![vec![T::zero(); channels]; capacity],
            head: 0,
            filled: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.cols.len()
    }

    /// Entry pushed `capacity` steps ago (zeros until the buffer is full).
    pub fn oldest(&self) -> &[T] {
        &self.cols[self.head]
    }

    pub fn push(&mut self, col: &[T]) {
        self.cols[self.head].copy_from_slice(col);
        self.head = (self.head + 1) % self.cols.len();
        self.filled = (self.filled + 1).min(self.cols.len());
    }

    pub fn reset(&mut self) {
        for c in &mut self.cols {
            c.iter_mut().for_each(|v| *v = T::zero());
        }
        self.head = 0;
        self.filled = 0;
    }
}

/// Per-stream state: ring buffers, last emitted code, conditioning cursor
/// and the sampling generator.
#[derive(Debug, Clone)]
pub struct GenerationState<T> {
    pub rings: Vec<RingBuffer<T>>,
    pub prev_code: i64,
    pub cursor: usize,
    rng: ChaCha8Rng,
}

impl<T: Scalar> GenerationState<T> {
    pub fn new(params: &Parameters<T>, seed: u64) -> Self {
        let cfg = params.config();
        Self {
            rings: (0..cfg.layers)
                .map(|i| RingBuffer::new(cfg.dilation(i), cfg.residual_channels))
                .collect(),
            prev_code: cfg.silence_code() as i64,
            cursor: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn reset(&mut self, silence_code: usize, seed: u64) {
        self.rings.iter_mut().for_each(RingBuffer::reset);
        self.prev_code = silence_code as i64;
        self.cursor = 0;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }
}

/// Step-by-step sampler over one clip of conditioning features.
pub struct Generator<'m, 'p, T> {
    model: &'m PreparedModel<'p, T>,
    cond: Tensor<T>,
    state: GenerationState<T>,
}

impl<'m, 'p, T: Scalar> Generator<'m, 'p, T> {
    pub fn new(model: &'m PreparedModel<'p, T>, features: &Tensor<T>, seed: u64) -> Result<Self> {
        if features.shape().len() != 2 || features.dim(1) == 0 {
            return Err(Error::InvalidArgument("generation needs at least one frame".into()));
        }
        let cond = model.upsample(features)?;
        Ok(Self {
            model,
            cond,
            state: GenerationState::new(model.params, seed),
        })
    }

    /// Total samples this generator will emit.
    pub fn len(&self) -> usize {
        self.cond.dim(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn state(&self) -> &GenerationState<T> {
        &self.state
    }

    /// Logits for the next sample given the previous code, without sampling.
    pub fn next_logits(&mut self) -> Result<Vec<T>> {
        let m = self.model;
        let ctx = m.ctx;
        let t = self.state.cursor;
        let c_col = self.cond.column(t);
        let emb = &m.params.tensors()[m.idx.embedding];
        let mut x: Vec<T> = emb
            .row(self.state.prev_code as usize)
            .iter()
            .map(|&v| ctx.round_act(v))
            .collect();
        let mut skip: Option<Vec<T>> = None;
        for (layer, ring) in m.layers.iter().zip(self.state.rings.iter_mut()) {
            let past = ring.oldest().to_vec();
            let mut h = layer.dilation.step(&[&past, &x])?;
            let hc = layer.cond.step(&[&c_col])?;
            add_into(&ctx, &mut h, &hc);
            let half = h.len() / 2;
            let z: Vec<T> = (0..half).map(|i| gate(h[i], h[half + i], &ctx)).collect();
            let s = layer.skip.step(&[&z])?;
            match skip.as_mut() {
                None => skip = Some(s),
                Some(acc) => add_into(&ctx, acc, &s),
            }
            ring.push(&x);
            if let Some(res) = &layer.residual {
                let r = res.step(&[&z])?;
                add_into(&ctx, &mut x, &r);
            }
        }
        let head: Vec<T> = skip
            .expect("at least one layer")
            .into_iter()
            .map(|v| v.max(T::zero()))
            .collect();
        let o: Vec<T> = m.out.step(&[&head])?.into_iter().map(|v| v.max(T::zero())).collect();
        m.end.step(&[&o])
    }

    /// Emit one sample; returns the code and the logits it was drawn from,
    /// or `None` when the conditioning is exhausted.
    pub fn step(&mut self) -> Result<Option<(usize, Vec<T>)>> {
        if self.state.cursor >= self.len() {
            return Ok(None);
        }
        let logits = self.next_logits()?;
        let code = softmax_sample(&logits, &mut self.state.rng, &self.model.ctx)?;
        self.state.prev_code = code as i64;
        self.state.cursor += 1;
        Ok(Some((code, logits)))
    }
}

fn add_into<T: Scalar>(ctx: &PrecisionContext, a: &mut [T], b: &[T]) {
    for (x, &y) in a.iter_mut().zip(b) {
        *x = ctx.round_act(*x + y);
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub codes: Vec<usize>,
    pub audio: AudioClip,
}

/// Synthesize `stride * frames` samples from `features [mel x frames]`.
pub fn generate<T: Scalar>(
    params: &Parameters<T>,
    features: &Tensor<T>,
    seed: u64,
    ctx: &PrecisionContext,
    calib: Option<&Int8Calibration>,
) -> Result<Generated> {
    let model = PreparedModel::new(params, ctx, calib)?;
    let mut gen = Generator::new(&model, features, seed)?;
    let mut codes = Vec::with_capacity(gen.len());
    while let Some((code, _)) = gen.step()? {
        codes.push(code);
    }
    let cfg = params.config();
    let samples = codes
        .iter()
        .map(|&c| mulaw_decode_channels(c, cfg.audio_channels).map(|v| v as f32))
        .collect::<Result<Vec<_>>>()?;
    Ok(Generated {
        codes,
        audio: AudioClip::new(samples, cfg.sample_rate),
    })
}

