use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::normalize::{weighted_aggregate, DirectionalScore};
use crate::error::{Error, Result};

/// Directional scores per system, keyed by metric id.
pub type Profiles = BTreeMap<String, BTreeMap<String, f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// The first system dominates the second.
    Dominates,
    DominatedBy,
    Equivalent,
    Incomparable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub a: String,
    pub b: String,
    pub verdict: Verdict,
    /// Metrics where `a` scores strictly higher.
    pub a_better: Vec<String>,
    pub b_better: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceResult {
    pub pairs: Vec<PairVerdict>,
    /// Metrics on which some incomparable pair conflicts.
    pub unresolved: Vec<String>,
    /// Systems no other system dominates.
    pub non_dominated: Vec<String>,
}

impl DominanceResult {
    pub fn verdict(&self, a: &str, b: &str) -> Option<Verdict> {
        self.pairs.iter().find_map(|p| {
            if p.a == a && p.b == b {
                Some(p.verdict)
            } else if p.a == b && p.b == a {
                Some(match p.verdict {
                    Verdict::Dominates => Verdict::DominatedBy,
                    Verdict::DominatedBy => Verdict::Dominates,
                    v => v,
                })
            } else {
                None
            }
        })
    }
}

/// True iff `a` is no worse everywhere and strictly better somewhere.
pub fn dominates(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> bool {
    a.iter().all(|(k, v)| b.get(k).is_some_and(|w| v >= w)) && a.iter().any(|(k, v)| b.get(k).is_some_and(|w| v > w))
}

fn compare(a: &str, pa: &BTreeMap<String, f64>, b: &str, pb: &BTreeMap<String, f64>) -> PairVerdict {
    let a_better: Vec<String> = pa.iter().filter(|(k, v)| **v > pb[*k]).map(|(k, _)| k.clone()).collect();
    let b_better: Vec<String> = pa.iter().filter(|(k, v)| **v < pb[*k]).map(|(k, _)| k.clone()).collect();
    let verdict = match (a_better.is_empty(), b_better.is_empty()) {
        (true, true) => Verdict::Equivalent,
        (false, true) => Verdict::Dominates,
        (true, false) => Verdict::DominatedBy,
        (false, false) => Verdict::Incomparable,
    };
    PairVerdict {
        a: a.to_string(),
        b: b.to_string(),
        verdict,
        a_better,
        b_better,
    }
}

pub fn pareto_order(profiles: &Profiles) -> Result<DominanceResult> {
    let mut iter = profiles.iter();
    let Some((first_id, first)) = iter.next() else {
        return Err(Error::InsufficientData("no profiles to order".into()));
    };
    let keys: BTreeSet<&String> = first.keys().collect();
    for (id, p) in iter {
        let other: BTreeSet<&String> = p.keys().collect();
        if other != keys {
            return Err(Error::DimensionMismatch {
                only_left: keys.difference(&other).map(|s| format!("{first_id}:{s}")).collect(),
                only_right: other.difference(&keys).map(|s| format!("{id}:{s}")).collect(),
            });
        }
    }
    let ids: Vec<&String> = profiles.keys().collect();
    let mut pairs = Vec::new();
    let mut unresolved = BTreeSet::new();
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            let v = compare(ids[i], &profiles[ids[i]], ids[j], &profiles[ids[j]]);
            if v.verdict == Verdict::Incomparable {
                unresolved.extend(v.a_better.iter().chain(&v.b_better).cloned());
            }
            pairs.push(v);
        }
    }
    let non_dominated = ids
        .iter()
        .filter(|s| !ids.iter().any(|o| dominates(&profiles[*o], &profiles[**s])))
        .map(|s| s.to_string())
        .collect();
    Ok(DominanceResult {
        pairs,
        unresolved: unresolved.into_iter().collect(),
        non_dominated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightingOutcome {
    pub weights: BTreeMap<String, f64>,
    pub composites: BTreeMap<String, f64>,
    /// Systems sharing the top composite.
    pub winners: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    pub outcomes: Vec<WeightingOutcome>,
    /// One and the same system wins alone under every weighting.
    pub stable: bool,
}

/// Winner of the weighted composite under each weighting in `grid`.
pub fn sensitivity_analysis(profiles: &Profiles, grid: &[BTreeMap<String, f64>]) -> Result<SensitivityResult> {
    if grid.is_empty() {
        return Err(Error::Config("sensitivity grid is empty".into()));
    }
    let mut outcomes = Vec::new();
    for weights in grid {
        let mut composites = BTreeMap::new();
        for (sys, p) in profiles {
            let scores: Vec<DirectionalScore> = p
                .iter()
                .map(|(m, v)| DirectionalScore {
                    metric_id: m.clone(),
                    value: *v,
                    orientation: crate::catalog::Orientation::HigherBetter,
                })
                .collect();
            composites.insert(sys.clone(), weighted_aggregate(&scores, weights)?);
        }
        let top = composites.values().copied().fold(f64::NEG_INFINITY, f64::max);
        let winners = composites.iter().filter(|(_, v)| **v == top).map(|(k, _)| k.clone()).collect();
        outcomes.push(WeightingOutcome {
            weights: weights.clone(),
            composites,
            winners,
        });
    }
    let first = &outcomes[0].winners;
    let stable = first.len() == 1 && outcomes.iter().all(|o| &o.winners == first);
    Ok(SensitivityResult { outcomes, stable })
}
