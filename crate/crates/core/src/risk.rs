//! Risk profiles and the marginal-risk delta between a new system and its baseline.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Risk dimensions the harness knows about out of the box. The set is open:
/// any other name is accepted as well.
pub const SEED_DIMENSIONS: [&str; 9] = [
    "performance",
    "reliability",
    "safety",
    "security",
    "fairness",
    "privacy",
    "compliance",
    "cost",
    "resilience",
];

/// Named risk scores; higher means more risk. Scores are unitless.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RiskProfile {
    dimensions: BTreeMap<String, f64>,
}

impl RiskProfile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<K: Into<String>>(pairs: impl IntoIterator<Item = (K, f64)>) -> Result<Self> {
        let mut p = Self::new();
        for (k, v) in pairs {
            let k = k.into();
            if p.dimensions.contains_key(&k) {
                return Err(Error::Config(format!("duplicate risk dimension `{k}`")));
            }
            p.set(k, v)?;
        }
        Ok(p)
    }

    pub fn set(&mut self, dimension: impl Into<String>, score: f64) -> Result<()> {
        let dimension = dimension.into();
        if !score.is_finite() {
            return Err(Error::Config(format!(
                "risk score for `{dimension}` is not finite"
            )));
        }
        self.dimensions.insert(dimension, score);
        Ok(())
    }

    pub fn get(&self, dimension: &str) -> Option<f64> {
        self.dimensions.get(dimension).copied()
    }

    pub fn dimensions(&self) -> &BTreeMap<String, f64> {
        &self.dimensions
    }

    pub fn len(&self) -> usize {
        self.dimensions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dimensions.is_empty()
    }

    /// Keeps only the named dimensions.
    pub fn restrict<'a>(&self, keep: impl IntoIterator<Item = &'a str>) -> Self {
        let keep: Vec<&str> = keep.into_iter().collect();
        Self {
            dimensions: self
                .dimensions
                .iter()
                .filter(|(k, _)| keep.contains(&k.as_str()))
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
        }
    }
}

/// Signed per-dimension change; positive = risk added, negative = risk reduced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RiskDelta {
    dimensions: BTreeMap<String, f64>,
}

impl RiskDelta {
    pub fn get(&self, dimension: &str) -> Option<f64> {
        self.dimensions.get(dimension).copied()
    }

    pub fn dimensions(&self) -> &BTreeMap<String, f64> {
        &self.dimensions
    }

    pub fn is_zero(&self) -> bool {
        self.dimensions.values().all(|v| *v == 0.0)
    }
}

/// `new − baseline`, dimension by dimension.
pub fn marginal_risk(new: &RiskProfile, baseline: &RiskProfile) -> Result<RiskDelta> {
    let only_left: Vec<String> = new
        .dimensions
        .keys()
        .filter(|k| !baseline.dimensions.contains_key(*k))
        .cloned()
        .collect();
    let only_right: Vec<String> = baseline
        .dimensions
        .keys()
        .filter(|k| !new.dimensions.contains_key(*k))
        .cloned()
        .collect();
    if !only_left.is_empty() || !only_right.is_empty() {
        return Err(Error::DimensionMismatch {
            only_left,
            only_right,
        });
    }
    let dimensions = new
        .dimensions
        .iter()
        .map(|(k, v)| (k.clone(), v - baseline.dimensions[k]))
        .collect();
    Ok(RiskDelta { dimensions })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(pairs: &[(&str, f64)]) -> RiskProfile {
        RiskProfile::from_pairs(pairs.iter().map(|(k, v)| (*k, *v))).unwrap()
    }

    #[test]
    fn componentwise_difference() {
        let d = marginal_risk(
            &profile(&[("perf", 0.5), ("fair", 0.2)]),
            &profile(&[("perf", 0.3), ("fair", 0.4)]),
        )
        .unwrap();
        assert!((d.get("perf").unwrap() - 0.2).abs() < 1e-15);
        assert!((d.get("fair").unwrap() + 0.2).abs() < 1e-15);
    }

    #[test]
    fn identical_profiles_give_zero() {
        let p = profile(&[("reliability", 0.7), ("cost", 3.0)]);
        assert!(marginal_risk(&p, &p).unwrap().is_zero());
    }

    #[test]
    fn antisymmetric_unit_case() {
        let a = profile(&[("perf", 1.0)]);
        let b = profile(&[("perf", 0.0)]);
        assert_eq!(marginal_risk(&a, &b).unwrap().get("perf"), Some(1.0));
        assert_eq!(marginal_risk(&b, &a).unwrap().get("perf"), Some(-1.0));
    }

    #[test]
    fn mismatch_names_offending_keys() {
        let err = marginal_risk(&profile(&[("perf", 1.0)]), &profile(&[("cost", 1.0)])).unwrap_err();
        match err {
            Error::DimensionMismatch {
                only_left,
                only_right,
            } => {
                assert_eq!(only_left, vec!["perf"]);
                assert_eq!(only_right, vec!["cost"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_finite_and_duplicates() {
        assert!(RiskProfile::from_pairs([("a", f64::NAN)]).is_err());
        assert!(RiskProfile::from_pairs([("a", 1.0), ("a", 2.0)]).is_err());
    }
}
