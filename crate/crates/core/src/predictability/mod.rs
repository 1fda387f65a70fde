//! Predictability metrics: how stable a system is under repetition,
//! perturbation and control changes.

mod consistency;
mod stability;
mod uncertainty;

pub use consistency::{
    cross_consensus, disagreement, intraclass_correlation, self_consistency, ConsistencyScore,
};
pub(crate) use consistency::mean_pairwise;
pub use stability::{control_stability, input_stability, spearman, ControlCurve, StabilityScore};
pub use uncertainty::{
    consensus_labels, uncertainty_profile, LeveledTrial, UncertaintyProfile, DEFAULT_COVERAGES,
};

/// Repeat count per input when the configuration does not set one.
pub const DEFAULT_REPEATS: usize = 10;
