//! Teacher-forced training with Adam, the pruning hook, and evaluation.

mod loss;
mod optim;
mod segment;
mod train;

pub use loss::{cross_entropy, cross_entropy_with_grad};
pub use optim::{adam_step, OptimizerState, TrainConfig};
pub use segment::{sample_segment, Segment};
pub use train::{
    evaluate, layer_sparsity, one_shot_2to4_procedure, train, OneShotOutcome, Pruning, StepMetrics, TrainOutcome,
    Trainer,
};
