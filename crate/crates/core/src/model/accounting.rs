//! Parameter and operation counts per layer type.

use serde::Serialize;

use super::config::ModelConfig;
use super::params::{layout, LayerKind, ParamInfo};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerCount {
    pub kind: LayerKind,
    /// Instances of this layer (L for repeated layers, L - 1 for residual).
    pub instances: usize,
    pub params_per_layer: usize,
    pub params_total: usize,
    /// Multiply-adds per generated sample, one instance.
    pub macs_per_sample: f64,
    /// Operations per generated sample, one instance.
    pub ops_per_sample: f64,
    /// Giga-operations per second of audio, one instance (`None` for lookups).
    pub gops_per_layer: Option<f64>,
    pub gops_total: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelCounts {
    pub rows: Vec<LayerCount>,
    pub total_params: usize,
    pub total_gops: f64,
    pub total_macs_per_sample: f64,
}

impl ModelCounts {
    pub fn row(&self, kind: LayerKind) -> &LayerCount {
        self.rows.iter().find(|r| r.kind == kind).expect("every kind has a row")
    }

    /// Fraction of total operations spent in `kinds`.
    pub fn ops_share(&self, kinds: &[LayerKind]) -> f64 {
        let part: f64 = self
            .rows
            .iter()
            .filter(|r| kinds.contains(&r.kind))
            .filter_map(|r| r.gops_total)
            .sum();
        part / self.total_gops
    }

    /// Fraction of all parameters held by `kinds`.
    pub fn param_share(&self, kinds: &[LayerKind]) -> f64 {
        let part: usize = self
            .rows
            .iter()
            .filter(|r| kinds.contains(&r.kind))
            .map(|r| r.params_total)
            .sum();
        part as f64 / self.total_params as f64
    }
}

/// Multiply-adds per generated audio sample for one weight tensor.
pub fn weight_macs_per_sample(info: &ParamInfo, config: &ModelConfig) -> f64 {
    match info.kind {
        LayerKind::Embedding => 0.0,
        LayerKind::Upsample => info.numel() as f64 / config.upsample_stride as f64,
        _ => info.numel() as f64,
    }
}

fn build_counts(config: &ModelConfig) -> ModelCounts {
    let infos = layout(config);
    let rows: Vec<LayerCount> = LayerKind::ALL
        .iter()
        .map(|&kind| {
            let members: Vec<&ParamInfo> = infos.iter().filter(|i| i.kind == kind).collect();
            let instances = if kind.is_repeated() {
                members
                    .iter()
                    .filter_map(|i| i.layer)
                    .collect::<std::collections::BTreeSet<_>>()
                    .len()
            } else {
                1
            };
            let params_total: usize = members.iter().map(|i| i.numel()).sum();
            let params_per_layer = if instances == 0 { 0 } else { params_total / instances };
            let (macs, ops) = members
                .iter()
                .filter(|i| !i.is_bias && kind != LayerKind::Embedding)
                .fold((0.0, 0.0), |(m, o), w| {
                    let macs = weight_macs_per_sample(w, config);
                    let outputs = w.shape[0] as f64;
                    let biased = members
                        .iter()
                        .any(|b| b.is_bias && b.layer == w.layer);
                    // each output: fan_in products, fan_in - 1 additions, plus a bias add
                    let ops = 2.0 * macs - if biased { 0.0 } else { outputs };
                    (m + macs, o + ops)
                });
            let (macs_one, ops_one) = if instances == 0 {
                (0.0, 0.0)
            } else {
                (macs / instances as f64, ops / instances as f64)
            };
            let rate = config.sample_rate as f64 / 1e9;
            let lookup = kind == LayerKind::Embedding;
            LayerCount {
                kind,
                instances,
                params_per_layer,
                params_total,
                macs_per_sample: macs_one,
                ops_per_sample: ops_one,
                gops_per_layer: (!lookup).then_some(ops_one * rate),
                gops_total: (!lookup).then_some(ops * rate),
            }
        })
        .collect();
    ModelCounts {
        total_params: rows.iter().map(|r| r.params_total).sum(),
        total_gops: rows.iter().filter_map(|r| r.gops_total).sum(),
        total_macs_per_sample: rows.iter().map(|r| r.macs_per_sample * r.instances as f64).sum(),
        rows,
    }
}

/// Parameter counts per layer type (biases included where present).
pub fn count_parameters(config: &ModelConfig) -> ModelCounts {
    build_counts(config)
}

/// Giga-operations per second of audio per layer type. A multiply-add is
/// two operations, except that the first product of each output needs no
/// addition unless a bias is added; the upsampler is amortized over its
/// stride and the embedding lookup is free.
pub fn count_ops(config: &ModelConfig) -> ModelCounts {
    build_counts(config)
}
