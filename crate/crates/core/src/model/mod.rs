//! The WaveNet vocoder: configuration, parameter layout and accounting,
//! teacher-forced evaluation, generation and gradients.

mod accounting;
mod config;
mod forward;
mod generate;
mod grad;
mod params;

pub use accounting::{count_ops, count_parameters, weight_macs_per_sample, LayerCount, ModelCounts};
pub use config::{ModelConfig, DILATION_KERNEL};
pub use forward::{
    forward_teacher_forced, forward_with_cache, record_sites, ForwardCache, PreparedModel,
    SiteRecorder,
};
pub use generate::{generate, Generated, GenerationState, Generator, RingBuffer};
pub use grad::{backward, loss_and_grad};
pub use params::{layout, LayerKind, ParamInfo, Parameters};
