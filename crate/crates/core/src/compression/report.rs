//! Compression-ratio and theoretical-speedup accounting.

use serde::{Deserialize, Serialize};

use super::mask::{balanced_keep, MaskSet, GROUP};
use super::prune::dropped_count;
use crate::model::{layout, weight_macs_per_sample, LayerKind, ModelConfig, ParamInfo, Parameters};
use crate::numerics::{bits_per_value, FormatName};
use crate::scalar::Scalar;

/// Which layers count toward the sparse multiply-add pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpeedupConvention {
    /// Repeated layers and `out` only; the upsampler is counted dense.
    UpsampleDense,
    /// The upsampler is counted at its achieved density too.
    UpsampleSparse,
}

impl SpeedupConvention {
    fn in_pool(self, kind: LayerKind) -> bool {
        match kind {
            LayerKind::Upsample => self == SpeedupConvention::UpsampleSparse,
            k => k.is_pruned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub name: String,
    pub kind: LayerKind,
    pub pruned: bool,
    pub numel: usize,
    pub kept: usize,
    pub original_bits: f64,
    pub compressed_bits: f64,
}

impl LayerReport {
    pub fn sparsity(&self) -> f64 {
        if self.numel == 0 {
            0.0
        } else {
            1.0 - self.kept as f64 / self.numel as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub format: FormatName,
    pub layers: Vec<LayerReport>,
    pub original_bits: f64,
    pub compressed_bits: f64,
    /// Ratio over the pruned layers only.
    pub sparse_layer_cr: f64,
    /// Ratio over every parameter.
    pub model_cr: f64,
    pub speedup_upsample_dense: f64,
    pub speedup_upsample_sparse: f64,
}

impl CompressionReport {
    pub fn speedup(&self, convention: SpeedupConvention) -> f64 {
        match convention {
            SpeedupConvention::UpsampleDense => self.speedup_upsample_dense,
            SpeedupConvention::UpsampleSparse => self.speedup_upsample_sparse,
        }
    }

    /// Achieved sparsity over all pruned weights.
    pub fn pruned_sparsity(&self) -> f64 {
        let (kept, numel) = self
            .layers
            .iter()
            .filter(|l| l.pruned)
            .fold((0, 0), |(k, n), l| (k + l.kept, n + l.numel));
        if numel == 0 {
            0.0
        } else {
            1.0 - kept as f64 / numel as f64
        }
    }
}

/// Bits for `kept` stored values of a tensor shaped `shape`. Mask and index
/// overhead is not counted, so ratios are upper bounds.
fn tensor_bits(format: FormatName, shape: &[usize], kept: usize) -> f64 {
    let bpv = bits_per_value(&format.spec(), shape);
    (kept as u64 * bpv.numer()) as f64 / *bpv.denom() as f64
}

/// Build a report from a per-tensor kept count.
pub fn report_from_kept(
    config: &ModelConfig,
    format: FormatName,
    kept: impl Fn(&ParamInfo) -> usize,
) -> CompressionReport {
    let infos = layout(config);
    let layers: Vec<LayerReport> = infos
        .iter()
        .map(|info| {
            let k = kept(info).min(info.numel());
            LayerReport {
                name: info.name.clone(),
                kind: info.kind,
                pruned: info.is_pruned(),
                numel: info.numel(),
                kept: k,
                original_bits: tensor_bits(FormatName::Fp32, &info.shape, info.numel()),
                compressed_bits: tensor_bits(format, &info.shape, k),
            }
        })
        .collect();
    let sum = |f: &dyn Fn(&LayerReport) -> f64, only_pruned: bool| -> f64 {
        layers.iter().filter(|l| !only_pruned || l.pruned).map(f).sum()
    };
    let original_bits = sum(&|l| l.original_bits, false);
    let compressed_bits = sum(&|l| l.compressed_bits, false);
    let sparse_layer_cr = sum(&|l| l.original_bits, true) / sum(&|l| l.compressed_bits, true);
    let speedup = |c| speedup_from_kept(config, &infos, &kept, c);
    CompressionReport {
        format,
        original_bits,
        compressed_bits,
        sparse_layer_cr,
        model_cr: original_bits / compressed_bits,
        speedup_upsample_dense: speedup(SpeedupConvention::UpsampleDense),
        speedup_upsample_sparse: speedup(SpeedupConvention::UpsampleSparse),
        layers,
    }
}

fn speedup_from_kept(
    config: &ModelConfig,
    infos: &[ParamInfo],
    kept: &dyn Fn(&ParamInfo) -> usize,
    convention: SpeedupConvention,
) -> f64 {
    let (mut dense, mut sparse) = (0.0, 0.0);
    for info in infos.iter().filter(|i| !i.is_bias) {
        let macs = weight_macs_per_sample(info, config);
        dense += macs;
        sparse += if convention.in_pool(info.kind) && info.numel() > 0 {
            macs * kept(info).min(info.numel()) as f64 / info.numel() as f64
        } else {
            macs
        };
    }
    dense / sparse
}

/// Report for `params` under `masks` (unmasked tensors are dense) stored in
/// `format`.
pub fn compression_ratios<T: Scalar>(params: &Parameters<T>, masks: &MaskSet, format: FormatName) -> CompressionReport {
    report_from_kept(params.config(), format, |info| {
        masks.kept(&info.name).unwrap_or(info.numel())
    })
}

/// Dense-multiply-add ratio per generated sample under `masks`.
pub fn theoretical_speedup(config: &ModelConfig, masks: &MaskSet, convention: SpeedupConvention) -> f64 {
    let infos = layout(config);
    let kept = |info: &ParamInfo| masks.kept(&info.name).unwrap_or(info.numel());
    speedup_from_kept(config, &infos, &kept, convention)
}

/// Pruning applied at its nominal rate, without a trained model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NominalPruning {
    Dense,
    /// Each pruned tensor keeps `numel - round(sparsity * numel)`.
    Unstructured(f64),
    Balanced2of4,
}

/// Entries a pruned tensor keeps under `pruning`.
pub fn nominal_kept(info: &ParamInfo, pruning: NominalPruning) -> usize {
    if !info.is_pruned() {
        return info.numel();
    }
    match pruning {
        NominalPruning::Dense => info.numel(),
        NominalPruning::Unstructured(s) => info.numel() - dropped_count(info.numel(), s),
        NominalPruning::Balanced2of4 => {
            let rows = info.shape[0].max(1);
            let row_len = info.numel() / rows;
            let per_row = row_len / GROUP * balanced_keep(GROUP) + balanced_keep(row_len % GROUP);
            rows * per_row
        }
    }
}

pub fn nominal_report(config: &ModelConfig, pruning: NominalPruning, format: FormatName) -> CompressionReport {
    report_from_kept(config, format, |info| nominal_kept(info, pruning))
}
