use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::cross_entropy;
use super::optim::{adam_step, OptimizerState, TrainConfig};
use super::segment::sample_segment;
use crate::audio_io::{mulaw_encode_channels, Checkpoint, Example};
use crate::compression::{iterative_prune_hook, prune_all_2to4, MaskSet, PruneEvent, PruneSchedules};
use crate::error::{Error, Result};
use crate::kernels::PrecisionContext;
use crate::model::{loss_and_grad, LayerKind, Parameters, PreparedModel};
use crate::numerics::Int8Calibration;
use crate::scalar::Scalar;

/// How the pruned layers evolve during a run.
#[derive(Debug, Clone, PartialEq)]
pub enum Pruning {
    Dense,
    /// Magnitude masks recomputed on each schedule's pruning steps.
    Iterative(PruneSchedules),
    /// Masks held fixed (retraining after one-shot pruning).
    Fixed(MaskSet),
}

/// One metrics-log line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub step: usize,
    pub loss: f64,
    /// Achieved sparsity per pruned layer kind.
    pub sparsity: BTreeMap<String, f64>,
}

impl fmt::Display for StepMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step={} loss={:.9}", self.step, self.loss)?;
        for (k, s) in &self.sparsity {
            write!(f, " {k}={s:.6}")?;
        }
        Ok(())
    }
}

fn kind_key(kind: LayerKind) -> String {
    format!("{kind:?}").to_lowercase()
}

/// Achieved sparsity of the pruned weights, aggregated per layer kind.
pub fn layer_sparsity<T: Scalar>(params: &Parameters<T>) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (info, t) in params.iter().filter(|(i, _)| i.is_pruned()) {
        let e = acc.entry(kind_key(info.kind)).or_default();
        e.0 += t.data().iter().filter(|x| **x == T::zero()).count();
        e.1 += t.numel();
    }
    acc.into_iter()
        .map(|(k, (z, n))| (k, if n == 0 { 0.0 } else { z as f64 / n as f64 }))
        .collect()
}

/// Single-threaded training loop. Each [`step`](Trainer::step) draws a
/// batch of segments, takes one Adam step and runs the pruning hook.
pub struct Trainer<'d, T> {
    params: Parameters<T>,
    opt: OptimizerState<T>,
    masks: MaskSet,
    schedules: Option<PruneSchedules>,
    cfg: TrainConfig,
    data: &'d [Example],
    rng: ChaCha8Rng,
    metrics: Vec<StepMetrics>,
    events: Vec<PruneEvent>,
}

impl<'d, T: Scalar> Trainer<'d, T> {
    pub fn new(params: Parameters<T>, cfg: TrainConfig, data: &'d [Example], pruning: Pruning) -> Result<Self> {
        cfg.validate()?;
        if data.is_empty() {
            return Err(Error::Data("training set is empty".into()));
        }
        let bands = params.config().mel_bins;
        if let Some(ex) = data.iter().find(|e| e.features.bands() != bands) {
            return Err(Error::Data(format!(
                "features have {} bands, model expects {bands}",
                ex.features.bands()
            )));
        }
        let mut params = params;
        let (masks, schedules) = match pruning {
            Pruning::Dense => (MaskSet::new(), None),
            Pruning::Iterative(s) => (MaskSet::new(), Some(s)),
            Pruning::Fixed(m) => {
                m.apply(&mut params)?;
                (m, None)
            }
        };
        Ok(Self {
            opt: OptimizerState::new(&params),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            params,
            masks,
            schedules,
            cfg,
            data,
            metrics: Vec::new(),
            events: Vec::new(),
        })
    }

    pub fn step_count(&self) -> usize {
        self.opt.step
    }

    pub fn params(&self) -> &Parameters<T> {
        &self.params
    }

    pub fn masks(&self) -> &MaskSet {
        &self.masks
    }

    pub fn metrics(&self) -> &[StepMetrics] {
        &self.metrics
    }

    pub fn events(&self) -> &[PruneEvent] {
        &self.events
    }

    /// One optimizer step. On divergence the parameters are left at their
    /// last good values.
    pub fn step(&mut self) -> Result<&StepMetrics> {
        let step = self.opt.step + 1;
        let channels = self.params.config().audio_channels;
        let mut total = 0.0;
        let mut grads: Option<Parameters<T>> = None;
        for _ in 0..self.cfg.batch_size {
            let ex = &self.data[self.rng.gen_range(0..self.data.len())];
            let seg = sample_segment(ex, &mut self.rng, self.cfg.segment_samples, channels)?;
            let (loss, g) = loss_and_grad(&self.params, &seg.features.to_tensor(), &seg.codes)?;
            total += loss;
            match grads.as_mut() {
                None => grads = Some(g),
                Some(acc) => {
                    for (a, b) in acc.tensors_mut().iter_mut().zip(g.tensors()) {
                        for (x, &y) in a.data_mut().iter_mut().zip(b.data()) {
                            *x += y;
                        }
                    }
                }
            }
        }
        let loss = total / self.cfg.batch_size as f64;
        if !loss.is_finite() {
            return Err(Error::Diverged { step, loss });
        }
        let mut grads = grads.expect("batch is nonempty");
        let inv = T::from_f64_lossy(1.0 / self.cfg.batch_size as f64);
        for t in grads.tensors_mut() {
            for x in t.data_mut() {
                *x *= inv;
            }
        }
        let masks = (!self.masks.is_empty()).then_some(&self.masks);
        adam_step(&mut self.params, &grads, &mut self.opt, &self.cfg, masks)?;
        if let Some(s) = &self.schedules {
            if let Some(ev) = iterative_prune_hook(step, &mut self.params, &mut self.masks, s)? {
                self.events.push(ev);
            }
        }
        self.metrics.push(StepMetrics {
            step,
            loss,
            sparsity: layer_sparsity(&self.params),
        });
        Ok(self.metrics.last().expect("just pushed"))
    }

    /// Step until `cfg.steps`, writing one metrics line per step to `log`.
    pub fn run(&mut self, mut log: Option<&mut (dyn Write + '_)>) -> Result<()> {
        while self.opt.step < self.cfg.steps {
            let m = self.step()?;
            if let Some(w) = log.as_deref_mut() {
                writeln!(w, "{m}")?;
            }
        }
        Ok(())
    }

    pub fn checkpoint(&self) -> Checkpoint<T> {
        let mut ck = Checkpoint::new(self.params.clone(), self.cfg.seed);
        ck.masks = self.masks.clone();
        ck.step = self.opt.step;
        ck.schedules = self.schedules.clone();
        ck
    }
}

/// Results of a finished run.
#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub checkpoint: Checkpoint<T>,
    pub metrics: Vec<StepMetrics>,
    pub events: Vec<PruneEvent>,
}

pub fn train<'w, T: Scalar>(
    params: Parameters<T>,
    cfg: &TrainConfig,
    data: &[Example],
    pruning: Pruning,
    log: Option<&mut (dyn Write + 'w)>,
) -> Result<TrainOutcome<T>> {
    let mut tr = Trainer::new(params, cfg.clone(), data, pruning)?;
    tr.run(log)?;
    Ok(TrainOutcome {
        checkpoint: tr.checkpoint(),
        metrics: tr.metrics,
        events: tr.events,
    })
}

/// Checkpoints of the one-shot 2:4 recipe.
#[derive(Debug, Clone)]
pub struct OneShotOutcome<T> {
    pub dense: Checkpoint<T>,
    /// Dense checkpoint with 2:4 masks applied, before retraining.
    pub pruned: Checkpoint<T>,
    pub retrained: Checkpoint<T>,
    pub metrics: Vec<StepMetrics>,
}

/// Train dense for `cfg.steps`, prune the pruned set to 2:4 once, then
/// retrain for the same number of steps with the masks held fixed.
pub fn one_shot_2to4_procedure<'w, T: Scalar>(
    params: Parameters<T>,
    cfg: &TrainConfig,
    data: &[Example],
    mut log: Option<&mut (dyn Write + 'w)>,
) -> Result<OneShotOutcome<T>> {
    let dense = train(params, cfg, data, Pruning::Dense, log.as_deref_mut())?;
    let mut p = dense.checkpoint.params.clone();
    let masks = prune_all_2to4(&mut p)?;
    let mut pruned = dense.checkpoint.clone();
    pruned.params = p.clone();
    pruned.masks = masks.clone();
    let retrain_cfg = TrainConfig {
        seed: cfg.seed.wrapping_add(1),
        ..cfg.clone()
    };
    let retrained = train(p, &retrain_cfg, data, Pruning::Fixed(masks), log)?;
    let mut metrics = dense.metrics;
    let offset = cfg.steps;
    metrics.extend(retrained.metrics.into_iter().map(|m| StepMetrics {
        step: m.step + offset,
        ..m
    }));
    let mut retrained_ck = retrained.checkpoint;
    retrained_ck.step += offset;
    Ok(OneShotOutcome {
        dense: dense.checkpoint,
        pruned,
        retrained: retrained_ck,
        metrics,
    })
}

/// Mean teacher-forced cross-entropy per sample over whole clips.
pub fn evaluate<T: Scalar>(
    params: &Parameters<T>,
    data: &[Example],
    ctx: &PrecisionContext,
    calib: Option<&Int8Calibration>,
) -> Result<f64> {
    let model = PreparedModel::new(params, ctx, calib)?;
    let channels = params.config().audio_channels;
    let (mut total, mut count) = (0.0, 0usize);
    for ex in data {
        let codes: Vec<usize> = ex
            .audio
            .samples
            .iter()
            .map(|&s| mulaw_encode_channels(s as f64, channels))
            .collect();
        let logits = model.forward(&ex.features.to_tensor(), &codes)?;
        total += cross_entropy(&logits, &codes)? * codes.len() as f64;
        count += codes.len();
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}
