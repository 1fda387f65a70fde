//! Directional scores, composite and rank aggregation, dominance and
//! uncertainty.

mod bootstrap;
mod dominance;
mod normalize;
mod rank;

pub use bootstrap::{bootstrap_ci, Interval, Statistic, DEFAULT_LEVEL, DEFAULT_RESAMPLES};
pub use dominance::{
    dominates, pareto_order, sensitivity_analysis, DominanceResult, PairVerdict, Profiles, SensitivityResult, Verdict,
    WeightingOutcome,
};
pub use normalize::{normalize_directional, weighted_aggregate, DirectionalScore};
pub use rank::{
    bradley_terry, components, copeland, BtFit, CopelandResult, StrengthVector, DEFAULT_MAX_ITER, DEFAULT_TOL,
    ZERO_WIN_EPSILON,
};
