use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LayerKind;

/// Default pruning frequency in steps.
pub const PRUNE_FREQUENCY: usize = 500;

/// Fraction of training over which sparsity ramps up by default.
pub const DEFAULT_RAMP_FRACTION: f64 = 0.8;

/// Cubic sparsity ramp from `initial_sparsity` at `start_step` to
/// `final_sparsity` after `pruning_steps` events spaced `frequency` apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneSchedule {
    pub initial_sparsity: f64,
    pub final_sparsity: f64,
    pub start_step: usize,
    pub pruning_steps: usize,
    pub frequency: usize,
    pub exponent: i32,
}

impl PruneSchedule {
    pub fn new(final_sparsity: f64, start_step: usize, pruning_steps: usize, frequency: usize) -> Result<Self> {
        let s = Self {
            initial_sparsity: 0.0,
            final_sparsity,
            start_step,
            pruning_steps,
            frequency,
            exponent: 3,
        };
        s.validate()?;
        Ok(s)
    }

    /// Ramp over the first 80% of `total_steps`, starting at step 0.
    pub fn for_training(final_sparsity: f64, total_steps: usize, frequency: usize) -> Result<Self> {
        let frequency = frequency.max(1);
        let span = (total_steps as f64 * DEFAULT_RAMP_FRACTION).floor() as usize;
        Self::new(final_sparsity, 0, (span / frequency).max(1), frequency)
    }

    pub fn validate(&self) -> Result<()> {
        let (si, sf) = (self.initial_sparsity, self.final_sparsity);
        if !(0.0..1.0).contains(&si) || !(si..1.0).contains(&sf) {
            return Err(Error::Config(format!(
                "need 0 <= initial ({si}) <= final ({sf}) < 1"
            )));
        }
        if self.frequency == 0 || self.pruning_steps == 0 {
            return Err(Error::Config("pruning frequency and step count must be positive".into()));
        }
        if self.exponent < 1 {
            return Err(Error::Config("schedule exponent must be positive".into()));
        }
        Ok(())
    }

    /// First step at which the final sparsity holds.
    pub fn end_step(&self) -> usize {
        self.start_step + self.pruning_steps * self.frequency
    }

    pub fn is_event(&self, step: usize) -> bool {
        step.is_multiple_of(self.frequency)
    }

    pub fn sparsity_at(&self, step: usize) -> f64 {
        schedule_sparsity(step, self)
    }
}

/// `s_f + (s_i - s_f) (1 - clamp((t - t0) / (n dt), 0, 1))^3`, with `t`
/// snapped down to the last multiple of `dt`.
pub fn schedule_sparsity(step: usize, sch: &PruneSchedule) -> f64 {
    let t = (step / sch.frequency * sch.frequency) as f64;
    let span = (sch.pruning_steps * sch.frequency) as f64;
    let progress = ((t - sch.start_step as f64) / span).clamp(0.0, 1.0);
    sch.final_sparsity
        + (sch.initial_sparsity - sch.final_sparsity) * (1.0 - progress).powi(sch.exponent)
}

/// Schedule per pruned layer kind.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PruneSchedules(pub BTreeMap<LayerKind, PruneSchedule>);

impl PruneSchedules {
    /// The same schedule for every pruned layer kind.
    pub fn uniform(sch: PruneSchedule) -> Self {
        Self(
            LayerKind::ALL
                .iter()
                .filter(|k| k.is_pruned())
                .map(|&k| (k, sch))
                .collect(),
        )
    }

    pub fn get(&self, kind: LayerKind) -> Option<&PruneSchedule> {
        self.0.get(&kind)
    }

    /// Any schedule fires at `step`.
    pub fn is_event(&self, step: usize) -> bool {
        self.0.values().any(|s| s.is_event(step))
    }
}

/// Sparsity that yields a sparse-layer compression ratio `cr` at FP32.
pub fn sparsity_for_cr(cr: f64) -> Result<f64> {
    if !(cr >= 1.0 && cr.is_finite()) {
        return Err(Error::Config(format!("compression ratio must be >= 1, got {cr}")));
    }
    Ok(1.0 - 1.0 / cr)
}
