use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalog::Orientation;
use crate::error::{Error, Result};

/// A metric value scaled to [0, 1] with higher always better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalScore {
    pub metric_id: String,
    pub value: f64,
    pub orientation: Orientation,
}

/// Min-max scales `values` onto [0, 1] and flips lower-better metrics.
/// Without `bounds` the observed range is used, and a zero-width observed
/// range maps every system to 0.5. Values outside `bounds` are clamped.
pub fn normalize_directional(
    metric_id: &str,
    values: &BTreeMap<String, f64>,
    orientation: Orientation,
    bounds: Option<(f64, f64)>,
) -> Result<BTreeMap<String, DirectionalScore>> {
    if values.is_empty() {
        return Err(Error::InsufficientData(format!("no values to normalise for `{metric_id}`")));
    }
    if let Some((s, v)) = values.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidComparison(format!("`{metric_id}` value {v} for `{s}` is not finite")));
    }
    let (lo, hi) = match bounds {
        Some((lo, hi)) if lo >= hi => {
            return Err(Error::Config(format!("bounds ({lo}, {hi}) for `{metric_id}` need lo < hi")))
        }
        Some(b) => b,
        None => {
            let lo = values.values().copied().fold(f64::INFINITY, f64::min);
            let hi = values.values().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        }
    };
    Ok(values
        .iter()
        .map(|(s, &v)| {
            let scaled = if hi == lo { 0.5 } else { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) };
            let value = match orientation {
                Orientation::HigherBetter => scaled,
                Orientation::LowerBetter => 1.0 - scaled,
            };
            (
                s.clone(),
                DirectionalScore {
                    metric_id: metric_id.to_string(),
                    value,
                    orientation,
                },
            )
        })
        .collect())
}

/// Σ w·value / Σ w over the given scores.
pub fn weighted_aggregate(scores: &[DirectionalScore], weights: &BTreeMap<String, f64>) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::InsufficientData("nothing to aggregate".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for s in scores {
        let w = *weights
            .get(&s.metric_id)
            .ok_or_else(|| Error::Config(format!("no weight for metric `{}`", s.metric_id)))?;
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::Config(format!("weight for `{}` must be ≥ 0, got {w}", s.metric_id)));
        }
        num += w * s.value;
        den += w;
    }
    if den <= 0.0 {
        return Err(Error::Config("weights over the aggregated metrics sum to zero".into()));
    }
    Ok(num / den)
}
