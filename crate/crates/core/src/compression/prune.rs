use serde::{Deserialize, Serialize};

use super::mask::{balanced_keep, Mask, MaskScheme, MaskSet, GROUP};
use super::schedule::PruneSchedules;
use crate::error::{Error, Result};
use crate::model::Parameters;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Entries dropped from a tensor of `numel` at `sparsity`.
pub fn dropped_count(numel: usize, sparsity: f64) -> usize {
    ((sparsity * numel as f64).round() as usize).min(numel)
}

/// Drop the `round(sparsity * numel)` smallest magnitudes; among equal
/// magnitudes the lowest flat index goes first.
pub fn prune_unstructured<T: Scalar>(owner: &str, t: &Tensor<T>, sparsity: f64) -> Result<Mask> {
    if !(0.0..1.0).contains(&sparsity) {
        return Err(Error::InvalidArgument(format!("sparsity {sparsity} outside [0, 1)")));
    }
    let data = t.data();
    let drop = dropped_count(data.len(), sparsity);
    let mut keep = vec![true; data.len()];
    if drop > 0 {
        // (magnitude, index) is a total order, so partial selection drops
        // exactly the same entries as a full sort would.
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.select_nth_unstable_by(drop - 1, |&i, &j| {
            data[i]
                .abs()
                .as_f64()
                .total_cmp(&data[j].abs().as_f64())
                .then(i.cmp(&j))
        });
        for &i in &order[..drop] {
            keep[i] = false;
        }
    }
    Mask::new(owner, MaskScheme::Unstructured, t.shape(), keep)
}

/// Keep the two largest magnitudes of every aligned group of four along
/// each output channel's flattened `in x kernel` axis; ties keep the lower
/// index. A short trailing group keeps `ceil(len / 2)`.
pub fn prune_2to4<T: Scalar>(owner: &str, t: &Tensor<T>) -> Result<Mask> {
    let rows = t.shape().first().copied().unwrap_or(1).max(1);
    let row_len = t.numel() / rows;
    let mut keep = vec![false; t.numel()];
    if row_len > 0 {
        for (r, row) in t.data().chunks(row_len).enumerate() {
            for (g, group) in row.chunks(GROUP).enumerate() {
                let mut idx: Vec<usize> = (0..group.len()).collect();
                idx.sort_by(|&i, &j| {
                    group[j]
                        .abs()
                        .as_f64()
                        .total_cmp(&group[i].abs().as_f64())
                        .then(i.cmp(&j))
                });
                for &i in &idx[..balanced_keep(group.len())] {
                    keep[r * row_len + g * GROUP + i] = true;
                }
            }
        }
    }
    Mask::new(owner, MaskScheme::Balanced2of4, t.shape(), keep)
}

/// Names of every pruned weight tensor.
pub fn pruned_tensors<T: Scalar>(params: &Parameters<T>) -> Vec<String> {
    params
        .infos()
        .iter()
        .filter(|i| i.is_pruned())
        .map(|i| i.name.clone())
        .collect()
}

/// 2:4 masks for the whole pruned set, applied to `params`.
pub fn prune_all_2to4<T: Scalar>(params: &mut Parameters<T>) -> Result<MaskSet> {
    let mut masks = MaskSet::new();
    for name in pruned_tensors(params) {
        let t = params.get(&name).expect("layout name");
        masks.insert(prune_2to4(&name, t)?);
    }
    masks.apply(params)?;
    Ok(masks)
}

/// One tensor's state after a pruning event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSparsity {
    pub name: String,
    pub target: f64,
    pub kept: usize,
    pub numel: usize,
}

impl TensorSparsity {
    pub fn achieved(&self) -> f64 {
        1.0 - self.kept as f64 / self.numel as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneEvent {
    pub step: usize,
    pub tensors: Vec<TensorSparsity>,
}

/// Recompute magnitude masks for the pruned set when `step` is a pruning
/// step of the schedules, and zero the dropped weights. Returns the event,
/// or `None` off-schedule.
pub fn iterative_prune_hook<T: Scalar>(
    step: usize,
    params: &mut Parameters<T>,
    masks: &mut MaskSet,
    schedules: &PruneSchedules,
) -> Result<Option<PruneEvent>> {
    let mut tensors = Vec::new();
    let pruned: Vec<_> = params.infos().iter().filter(|i| i.is_pruned()).cloned().collect();
    for info in pruned {
        let sch = schedules
            .get(info.kind)
            .ok_or_else(|| Error::MissingSchedule(info.name.clone()))?;
        if !sch.is_event(step) {
            continue;
        }
        let target = sch.sparsity_at(step);
        let t = params.get_mut(&info.name).expect("layout name");
        let mask = prune_unstructured(&info.name, t, target)?;
        mask.apply(t)?;
        tensors.push(TensorSparsity {
            name: info.name.clone(),
            target,
            kept: mask.popcount(),
            numel: mask.numel(),
        });
        masks.insert(mask);
    }
    Ok((!tensors.is_empty()).then_some(PruneEvent { step, tensors }))
}
