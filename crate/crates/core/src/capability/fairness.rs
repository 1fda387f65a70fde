use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub input_id: String,
    pub group: String,
    /// Binary (0/1) or scored outcome.
    pub outcome: f64,
}

impl Decision {
    pub fn new(input_id: impl Into<String>, group: impl Into<String>, outcome: f64) -> Self {
        Self {
            input_id: input_id.into(),
            group: group.into(),
            outcome,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessShift {
    /// group → new rate − baseline rate.
    pub deltas: BTreeMap<String, f64>,
    pub new_rates: BTreeMap<String, f64>,
    pub baseline_rates: BTreeMap<String, f64>,
    /// max − min over the new system's group rates.
    pub max_gap: f64,
    pub warnings: Vec<String>,
}

pub fn group_rates(decisions: &[Decision]) -> BTreeMap<String, f64> {
    let mut by_group: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for d in decisions {
        by_group.entry(&d.group).or_default().push(d.outcome);
    }
    by_group
        .into_iter()
        .filter_map(|(g, v)| stats::mean(&v).map(|m| (g.to_string(), m)))
        .collect()
}

/// Per-group outcome-rate deltas of `new` against `baseline`.
pub fn fairness_shift(new: &[Decision], baseline: &[Decision]) -> Result<FairnessShift> {
    if let Some(d) = new.iter().chain(baseline).find(|d| !d.outcome.is_finite()) {
        return Err(Error::Ingestion(format!("non-finite outcome for `{}`", d.input_id)));
    }
    let new_all = group_rates(new);
    let base_all = group_rates(baseline);
    let mut warnings = Vec::new();
    let mut new_rates = BTreeMap::new();
    let mut baseline_rates = BTreeMap::new();
    for g in new_all.keys().chain(base_all.keys()) {
        match (new_all.get(g), base_all.get(g)) {
            (Some(n), Some(b)) => {
                new_rates.insert(g.clone(), *n);
                baseline_rates.insert(g.clone(), *b);
            }
            _ => {
                let w = format!("group `{g}` has no members under one system and is excluded");
                if !warnings.contains(&w) {
                    warnings.push(w);
                }
            }
        }
    }
    if new_rates.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "fairness shift needs at least 2 shared groups, got {}",
            new_rates.len()
        )));
    }
    let deltas = new_rates
        .iter()
        .map(|(g, n)| (g.clone(), n - baseline_rates[g]))
        .collect();
    let hi = new_rates.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = new_rates.values().copied().fold(f64::INFINITY, f64::min);
    Ok(FairnessShift {
        deltas,
        new_rates,
        baseline_rates,
        max_gap: hi - lo,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decisions(rates: &[(&str, usize, usize)]) -> Vec<Decision> {
        let mut out = Vec::new();
        for (g, pos, total) in rates {
            for i in 0..*total {
                out.push(Decision::new(format!("{g}{i}"), *g, if i < *pos { 1.0 } else { 0.0 }));
            }
        }
        out
    }

    #[test]
    fn arithmetic_example() {
        let new = decisions(&[("G1", 6, 10), ("G2", 4, 10)]);
        let base = decisions(&[("G1", 5, 10), ("G2", 5, 10)]);
        let f = fairness_shift(&new, &base).unwrap();
        assert!((f.deltas["G1"] - 0.1).abs() < 1e-12);
        assert!((f.deltas["G2"] + 0.1).abs() < 1e-12);
        assert!((f.max_gap - 0.2).abs() < 1e-12);
    }

    #[test]
    fn reflexive_is_zero() {
        let d = decisions(&[("a", 3, 7), ("b", 1, 4), ("c", 0, 2)]);
        let f = fairness_shift(&d, &d).unwrap();
        assert!(f.deltas.values().all(|v| *v == 0.0));
    }

    #[test]
    fn unshared_groups_are_excluded_with_warning() {
        let new = decisions(&[("a", 1, 2), ("b", 1, 2), ("c", 1, 1)]);
        let base = decisions(&[("a", 1, 2), ("b", 0, 2)]);
        let f = fairness_shift(&new, &base).unwrap();
        assert_eq!(f.deltas.len(), 2);
        assert_eq!(f.warnings.len(), 1);
        assert!(fairness_shift(&decisions(&[("a", 1, 2)]), &decisions(&[("a", 1, 2)])).is_err());
    }
}
