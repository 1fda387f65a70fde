//! Fixed catalogue of metric identifiers, their family, orientation and the
//! risk dimension each one feeds.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dimension {
    Predictability,
    Capability,
    Interaction,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [
        Dimension::Predictability,
        Dimension::Capability,
        Dimension::Interaction,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Dimension::Predictability => "predictability",
            Dimension::Capability => "capability",
            Dimension::Interaction => "interaction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    HigherBetter,
    LowerBetter,
}

#[derive(Debug, Clone, Copy)]
pub struct MetricSpec {
    pub id: &'static str,
    pub dimension: Dimension,
    pub orientation: Orientation,
    /// Natural range used for directional scaling; `None` means observed min/max.
    pub bounds: Option<(f64, f64)>,
    pub risk_dimension: &'static str,
    pub agreement_based: bool,
}

const fn spec(
    id: &'static str,
    dimension: Dimension,
    orientation: Orientation,
    bounds: Option<(f64, f64)>,
    risk_dimension: &'static str,
    agreement_based: bool,
) -> MetricSpec {
    MetricSpec {
        id,
        dimension,
        orientation,
        bounds,
        risk_dimension,
        agreement_based,
    }
}

use Dimension::*;
use Orientation::*;

pub const SELF_CONSISTENCY: &str = "self_consistency";
pub const ICC: &str = "icc";
pub const CROSS_CONSENSUS: &str = "cross_consensus";
pub const INPUT_STABILITY: &str = "input_stability";
pub const CONTROL_STABILITY: &str = "control_stability";
pub const UNCERTAINTY_GOVERNANCE: &str = "uncertainty_governance";
pub const AGREEMENT_RATE: &str = "agreement_rate";
pub const TRIGGER_RATE: &str = "trigger_rate";
pub const DISTRIBUTION_SHIFT: &str = "distribution_shift";
pub const FAIRNESS_SHIFT: &str = "fairness_shift";
pub const OPERATIONAL_EFFICIENCY: &str = "operational_efficiency";
pub const BENCHMARK_PREFIX: &str = "benchmark:";
pub const PERSUASION: &str = "persuasion";
pub const PREDICTION_SURPRISE: &str = "prediction_surprise";
pub const COMPRESSION_RECONSTRUCTION: &str = "compression_reconstruction";

pub const METRICS: [MetricSpec; 14] = [
    spec(SELF_CONSISTENCY, Predictability, HigherBetter, Some((0.0, 1.0)), "reliability", false),
    spec(ICC, Predictability, HigherBetter, Some((-1.0, 1.0)), "reliability", false),
    spec(CROSS_CONSENSUS, Predictability, HigherBetter, Some((0.0, 1.0)), "reliability", true),
    spec(INPUT_STABILITY, Predictability, HigherBetter, Some((0.0, 1.0)), "reliability", false),
    spec(CONTROL_STABILITY, Predictability, HigherBetter, Some((-1.0, 1.0)), "reliability", false),
    spec(UNCERTAINTY_GOVERNANCE, Predictability, LowerBetter, Some((0.0, 1.0)), "safety", false),
    spec(AGREEMENT_RATE, Capability, HigherBetter, Some((0.0, 1.0)), "performance", true),
    spec(TRIGGER_RATE, Capability, LowerBetter, Some((0.0, 1.0)), "performance", false),
    spec(DISTRIBUTION_SHIFT, Capability, LowerBetter, Some((0.0, 1.0)), "performance", false),
    spec(FAIRNESS_SHIFT, Capability, LowerBetter, Some((0.0, 1.0)), "fairness", false),
    spec(OPERATIONAL_EFFICIENCY, Capability, LowerBetter, None, "cost", false),
    spec(PERSUASION, Interaction, HigherBetter, Some((0.0, 1.0)), "resilience", false),
    spec(PREDICTION_SURPRISE, Interaction, HigherBetter, Some((0.0, 1.0)), "resilience", false),
    spec(COMPRESSION_RECONSTRUCTION, Interaction, HigherBetter, Some((0.0, 1.0)), "resilience", false),
];

const BENCHMARK: MetricSpec = spec(BENCHMARK_PREFIX, Capability, HigherBetter, None, "performance", false);

/// Looks up a metric id; `benchmark:<name>` ids share one template.
pub fn lookup(id: &str) -> Option<MetricSpec> {
    if let Some(name) = id.strip_prefix(BENCHMARK_PREFIX) {
        if !name.is_empty() {
            return Some(BENCHMARK);
        }
    }
    METRICS.iter().find(|m| m.id == id).copied()
}

pub fn ids_for(dimension: Dimension) -> impl Iterator<Item = &'static str> {
    METRICS
        .iter()
        .filter(move |m| m.dimension == dimension)
        .map(|m| m.id)
}

pub fn agreement_metrics() -> impl Iterator<Item = &'static str> {
    METRICS.iter().filter(|m| m.agreement_based).map(|m| m.id)
}
