//! Comparative performance: rubric reviews, distribution shift, calibration,
//! fairness and operational cost.

mod calibration;
mod fairness;
mod ingest;
mod operational;
mod review;
mod shift;

pub use calibration::{quantile_at_ratio, quantile_map, CalibrationMap};
pub use fairness::{fairness_shift, group_rates, Decision, FairnessShift};
pub use ingest::{read_benchmarks, read_decisions, read_review_pairs, BenchmarkRecord};
pub use operational::{latency_summary, operational_metrics, OperationalSummary};
pub use review::{
    agreement_rate, trigger_rate, weighted_score, ReviewPair, ReviewSource, TriggerSummary, WeightedRubric,
    DEFAULT_AGREEMENT_TOLERANCE, DEFAULT_TRIGGER_THRESHOLD, SCALE_MAX, SCALE_MIN,
};
pub use shift::{distribution_shift, ks_statistic, ShiftSummary};
