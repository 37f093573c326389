use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ModelConfig, DILATION_KERNEL};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Layer types, in Table-1 order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LayerKind {
    Embedding,
    Upsample,
    Dilation,
    Conditional,
    Residual,
    Skip,
    Out,
    End,
}

impl LayerKind {
    pub const ALL: [LayerKind; 8] = [
        LayerKind::Embedding,
        LayerKind::Upsample,
        LayerKind::Dilation,
        LayerKind::Conditional,
        LayerKind::Residual,
        LayerKind::Skip,
        LayerKind::Out,
        LayerKind::End,
    ];

    pub fn label(self) -> &'static str {
        match self {
            LayerKind::Embedding => "Embedding",
            LayerKind::Upsample => "Feature Upsample",
            LayerKind::Dilation => "Dilation",
            LayerKind::Conditional => "Conditional",
            LayerKind::Residual => "Residual",
            LayerKind::Skip => "Skip",
            LayerKind::Out => "Out",
            LayerKind::End => "End",
        }
    }

    pub fn op_type(self) -> &'static str {
        match self {
            LayerKind::Embedding => "Embedding",
            LayerKind::Upsample => "ConvTranspose1d",
            LayerKind::Dilation => "Dilated Conv1d",
            _ => "Conv1d",
        }
    }

    pub fn is_repeated(self) -> bool {
        matches!(
            self,
            LayerKind::Dilation | LayerKind::Conditional | LayerKind::Residual | LayerKind::Skip
        )
    }

    /// Weights of this kind are pruned.
    pub fn is_pruned(self) -> bool {
        !matches!(self, LayerKind::Embedding | LayerKind::End)
    }
}

/// Static description of one named parameter tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamInfo {
    pub name: String,
    pub kind: LayerKind,
    pub layer: Option<usize>,
    pub is_bias: bool,
    pub shape: Vec<usize>,
}

impl ParamInfo {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }

    /// Pruned weights: every weight of a pruned layer kind; biases stay dense.
    pub fn is_pruned(&self) -> bool {
        !self.is_bias && self.kind.is_pruned()
    }
}

/// Every parameter tensor of `config`, in a fixed order.
pub fn layout(config: &ModelConfig) -> Vec<ParamInfo> {
    let (s, r, a, m) = (
        config.skip_channels,
        config.residual_channels,
        config.audio_channels,
        config.mel_bins,
    );
    let mut out = Vec::new();
    let mut push = |name: String, kind, layer, is_bias, shape: Vec<usize>| {
        out.push(ParamInfo {
            name,
            kind,
            layer,
            is_bias,
            shape,
        })
    };
    push("embedding".into(), LayerKind::Embedding, None, false, vec![a, r]);
    push(
        "upsample.weight".into(),
        LayerKind::Upsample,
        None,
        false,
        vec![m, m, config.upsample_kernel],
    );
    push("upsample.bias".into(), LayerKind::Upsample, None, true, vec![m]);
    for i in 0..config.layers {
        let p = format!("layers.{i}");
        push(format!("{p}.dilation.weight"), LayerKind::Dilation, Some(i), false, vec![2 * r, r, DILATION_KERNEL]);
        push(format!("{p}.dilation.bias"), LayerKind::Dilation, Some(i), true, vec![2 * r]);
        push(format!("{p}.conditional.weight"), LayerKind::Conditional, Some(i), false, vec![2 * r, m, 1]);
        push(format!("{p}.conditional.bias"), LayerKind::Conditional, Some(i), true, vec![2 * r]);
        if config.has_residual(i) {
            push(format!("{p}.residual.weight"), LayerKind::Residual, Some(i), false, vec![r, r, 1]);
            push(format!("{p}.residual.bias"), LayerKind::Residual, Some(i), true, vec![r]);
        }
        push(format!("{p}.skip.weight"), LayerKind::Skip, Some(i), false, vec![s, r, 1]);
        push(format!("{p}.skip.bias"), LayerKind::Skip, Some(i), true, vec![s]);
    }
    push("out.weight".into(), LayerKind::Out, None, false, vec![a, s, 1]);
    push("end.weight".into(), LayerKind::End, None, false, vec![a, a, 1]);
    out
}

/// Named parameter tensors of one model, ordered as [`layout`].
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters<T> {
    config: ModelConfig,
    infos: Vec<ParamInfo>,
    tensors: Vec<Tensor<T>>,
}

/// Index of each tensor inside [`Parameters`], resolved once per config.
#[derive(Debug, Clone)]
pub(crate) struct LayerIndex {
    pub dilation_w: usize,
    pub dilation_b: usize,
    pub cond_w: usize,
    pub cond_b: usize,
    pub residual: Option<(usize, usize)>,
    pub skip_w: usize,
    pub skip_b: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct ParamIndex {
    pub embedding: usize,
    pub upsample_w: usize,
    pub upsample_b: usize,
    pub layers: Vec<LayerIndex>,
    pub out_w: usize,
    pub end_w: usize,
}

impl<T: Scalar> Parameters<T> {
    /// Fresh parameters: weights uniform in `(-k, k)` with
    /// `k = sqrt(1 / fan_in)`, biases zero. Deterministic per seed.
    pub fn build(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let infos = layout(config);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = infos
            .iter()
            .map(|info| {
                if info.is_bias {
                    return Tensor::zeros(&info.shape);
                }
                let k = (1.0 / fan_in(info, config) as f64).sqrt();
                let data = (0..info.numel())
                    .map(|_| T::from_f64_lossy(rng.gen_range(-k..k)))
                    .collect();
                Tensor::from_vec(&info.shape, data).expect("layout shape")
            })
            .collect();
        Ok(Self {
            config: config.clone(),
            infos,
            tensors,
        })
    }

    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let infos = layout(config);
        let tensors = infos.iter().map(|i| Tensor::zeros(&i.shape)).collect();
        Ok(Self {
            config: config.clone(),
            infos,
            tensors,
        })
    }

    /// Assemble from named tensors; every layout entry must be present with
    /// the right shape.
    pub fn from_named(config: &ModelConfig, mut named: Vec<(String, Tensor<T>)>) -> Result<Self> {
        config.validate()?;
        let infos = layout(config);
        if named.len() != infos.len() {
            return Err(Error::Shape(format!(
                "expected {} tensors, got {}",
                infos.len(),
                named.len()
            )));
        }
        let mut tensors = Vec::with_capacity(infos.len());
        for info in &infos {
            let pos = named
                .iter()
                .position(|(n, _)| *n == info.name)
                .ok_or_else(|| Error::Shape(format!("missing tensor `{}`", info.name)))?;
            let (_, t) = named.swap_remove(pos);
            if t.shape() != info.shape.as_slice() {
                return Err(Error::Shape(format!(
                    "`{}` has shape {:?}, expected {:?}",
                    info.name,
                    t.shape(),
                    info.shape
                )));
            }
            tensors.push(t);
        }
        Ok(Self {
            config: config.clone(),
            infos,
            tensors,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn infos(&self) -> &[ParamInfo] {
        &self.infos
    }

    pub fn tensors(&self) -> &[Tensor<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.tensors
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ParamInfo, &Tensor<T>)> {
        self.infos.iter().zip(&self.tensors)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.infos.iter().position(|i| i.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.position(name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        self.position(name).map(move |i| &mut self.tensors[i])
    }

    pub fn total_parameters(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    pub fn cast<U: Scalar>(&self) -> Parameters<U> {
        Parameters {
            config: self.config.clone(),
            infos: self.infos.clone(),
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
        }
    }

    pub(crate) fn index(&self) -> ParamIndex {
        let pos = |n: &str| self.position(n).expect("layout name");
        ParamIndex {
            embedding: pos("embedding"),
            upsample_w: pos("upsample.weight"),
            upsample_b: pos("upsample.bias"),
            layers: (0..self.config.layers)
                .map(|i| LayerIndex {
                    dilation_w: pos(&format!("layers.{i}.dilation.weight")),
                    dilation_b: pos(&format!("layers.{i}.dilation.bias")),
                    cond_w: pos(&format!("layers.{i}.conditional.weight")),
                    cond_b: pos(&format!("layers.{i}.conditional.bias")),
                    residual: self.config.has_residual(i).then(|| {
                        (
                            pos(&format!("layers.{i}.residual.weight")),
                            pos(&format!("layers.{i}.residual.bias")),
                        )
                    }),
                    skip_w: pos(&format!("layers.{i}.skip.weight")),
                    skip_b: pos(&format!("layers.{i}.skip.bias")),
                })
                .collect(),
            out_w: pos("out.weight"),
            end_w: pos("end.weight"),
        }
    }
}

/// Inputs feeding one output element: `in * kernel` for convolutions,
/// `in * kernel / stride` for the upsampler, `audio_channels` for the
/// embedding (a one-hot lookup).
fn fan_in(info: &ParamInfo, config: &ModelConfig) -> usize {
    match info.kind {
        LayerKind::Embedding => config.audio_channels,
        LayerKind::Upsample => (info.shape[1] * info.shape[2] / config.upsample_stride).max(1),
        _ => info.shape[1] * info.shape[2],
    }
}
