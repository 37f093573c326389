//! Magnitude pruning, masks, and compression accounting.

mod mask;
mod prune;
mod report;
mod schedule;

pub use mask::{balanced_keep, GroupViolation, Mask, MaskScheme, MaskSet, GROUP};
pub use prune::{
    dropped_count, iterative_prune_hook, prune_2to4, prune_all_2to4, prune_unstructured, pruned_tensors,
    PruneEvent, TensorSparsity,
};
pub use report::{
    compression_ratios, nominal_kept, nominal_report, report_from_kept, theoretical_speedup, CompressionReport,
    LayerReport, NominalPruning, SpeedupConvention,
};
pub use schedule::{
    schedule_sparsity, sparsity_for_cr, PruneSchedule, PruneSchedules, DEFAULT_RAMP_FRACTION, PRUNE_FREQUENCY,
};
