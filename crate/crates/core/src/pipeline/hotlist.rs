use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::adapters::Trial;
use crate::error::{Error, Result};
use crate::predictability::mean_pairwise;
use crate::similarity::{Output, SimilarityKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HotItem {
    pub input_id: String,
    pub disagreement: f64,
    pub n_systems: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hotlist {
    pub items: Vec<HotItem>,
    /// Every listed input has zero disagreement.
    pub all_zero: bool,
}

impl Hotlist {
    pub fn input_ids(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.input_id.as_str()).collect()
    }
}

/// The `k` inputs on which systems disagree most, using one unperturbed,
/// control-free, answered trial per (system, input): the lowest seed.
pub fn divergence_hotlist(trials: &[Trial], judge: SimilarityKind, k: usize) -> Result<Hotlist> {
    if k == 0 {
        return Err(Error::Config("hot-list size must be at least 1".into()));
    }
    let mut chosen: BTreeMap<&str, BTreeMap<&str, &Trial>> = BTreeMap::new();
    let mut systems = BTreeSet::new();
    for t in trials.iter().filter(|t| t.variant_id == 0 && t.controls.is_empty() && !t.abstained) {
        systems.insert(t.system_id.as_str());
        let slot = chosen.entry(&t.input_id).or_default();
        match slot.get(t.system_id.as_str()) {
            Some(prev) if prev.seed <= t.seed => {}
            _ => {
                slot.insert(&t.system_id, t);
            }
        }
    }
    if systems.len() < 2 {
        return Err(Error::InsufficientData("the hot-list needs trials from at least two systems".into()));
    }
    let mut items = Vec::new();
    for (input, per_sys) in &chosen {
        if per_sys.len() < 2 {
            continue;
        }
        let outs: Vec<&Output> = per_sys.values().map(|t| &t.output).collect();
        items.push(HotItem {
            input_id: input.to_string(),
            disagreement: 1.0 - mean_pairwise(&outs, judge)?,
            n_systems: per_sys.len(),
        });
    }
    if items.is_empty() {
        return Err(Error::InsufficientData("no input was answered by two systems".into()));
    }
    // inputs are already in id order; the stable sort keeps it for ties
    items.sort_by(|a, b| b.disagreement.total_cmp(&a.disagreement));
    items.truncate(k);
    let all_zero = items.iter().all(|i| i.disagreement == 0.0);
    Ok(Hotlist { items, all_zero })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapters::{InputRecord, ScriptTable, SystemHandle};
    use crate::adapters::Controls;

    fn trials(tables: &[(&str, &[(&str, &str)])]) -> Vec<Trial> {
        let mut out = Vec::new();
        for (sys, rows) in tables {
            let t = ScriptTable::from_outputs(rows.iter().map(|(i, o)| (*i, Output::Text(o.to_string())))).unwrap();
            let h = SystemHandle::scripted(*sys, t);
            for (i, _) in rows.iter() {
                out.push(h.invoke(&InputRecord::new(*i, "x"), &Controls::new(), 0).unwrap());
            }
        }
        out
    }

    #[test]
    fn identical_systems_flagged_all_zero() {
        let rows: &[(&str, &str)] = &[("d1", "a"), ("d2", "b")];
        let h = divergence_hotlist(&trials(&[("s1", rows), ("s2", rows)]), SimilarityKind::ExactLabel, 5).unwrap();
        assert_eq!(h.items.len(), 2);
        assert!(h.all_zero);
        assert_eq!(h.input_ids(), vec!["d1", "d2"]);
    }

    #[test]
    fn unique_disagreement_ranks_first() {
        let a: &[(&str, &str)] = &[("d1", "a"), ("d2", "b"), ("d3", "c")];
        let b: &[(&str, &str)] = &[("d1", "a"), ("d2", "z"), ("d3", "c")];
        let h = divergence_hotlist(&trials(&[("s1", a), ("s2", b)]), SimilarityKind::ExactLabel, 1).unwrap();
        assert_eq!(h.input_ids(), vec!["d2"]);
        assert!(!h.all_zero);
    }

    #[test]
    fn k_zero_is_config_error() {
        let a: &[(&str, &str)] = &[("d1", "a")];
        assert!(matches!(
            divergence_hotlist(&trials(&[("s1", a), ("s2", a)]), SimilarityKind::ExactLabel, 0),
            Err(Error::Config(_))
        ));
    }
}
