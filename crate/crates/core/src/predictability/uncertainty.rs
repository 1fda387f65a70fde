use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::adapters::Trial;
use crate::error::{Error, Result};
use crate::stats;

pub const DEFAULT_COVERAGES: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// A trial tagged with the ambiguity level of the input it answered.
#[derive(Debug, Clone)]
pub struct LeveledTrial {
    pub level: f64,
    pub trial: Trial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyProfile {
    pub mean_entropy: f64,
    /// (ambiguity level, mean label entropy at that level).
    pub entropy_by_level: Vec<(f64, f64)>,
    pub abstain_rate: f64,
    /// (ambiguity level, abstain rate at that level).
    pub abstain_by_level: Vec<(f64, f64)>,
    /// (coverage, disagreement-with-consensus rate among the kept trials).
    pub selective_disagreement: Vec<(f64, f64)>,
    /// Non-abstaining trials left out of the curve because they carry no confidence.
    pub missing_confidence: usize,
}

impl UncertaintyProfile {
    /// Mean disagreement over the coverage curve.
    pub fn mean_selective_disagreement(&self) -> f64 {
        let v: Vec<f64> = self.selective_disagreement.iter().map(|p| p.1).collect();
        stats::mean(&v).unwrap_or(0.0)
    }
}

/// Modal label per input across all the given trials; ties go to the
/// lexicographically smallest label. Abstentions are ignored.
pub fn consensus_labels<'a>(trials: impl IntoIterator<Item = &'a Trial>) -> BTreeMap<String, String> {
    let mut counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for t in trials {
        if t.abstained {
            continue;
        }
        *counts
            .entry(t.input_id.clone())
            .or_default()
            .entry(t.output.label())
            .or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(input, hist)| {
            let best = hist
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
                .map(|(l, _)| l.clone())
                .unwrap_or_default();
            (input, best)
        })
        .collect()
}

fn level_key(level: f64) -> u64 {
    let b = level.to_bits();
    if level.is_sign_negative() { !b } else { b | (1 << 63) }
}

/// Entropy, abstention and confidence-ordered disagreement of one system.
pub fn uncertainty_profile(
    trials: &[LeveledTrial],
    consensus: &BTreeMap<String, String>,
    coverages: &[f64],
) -> Result<UncertaintyProfile> {
    if trials.is_empty() {
        return Err(Error::InsufficientData("no trials for the uncertainty profile".into()));
    }
    let mut coverages: Vec<f64> = coverages.to_vec();
    coverages.sort_by(stats::total_cmp);
    coverages.dedup();
    if coverages.iter().any(|c| !(*c > 0.0 && *c <= 1.0)) {
        return Err(Error::Config("coverage points must lie in (0, 1]".into()));
    }

    // label entropy per (input, variant) group, grouped again by level
    let mut groups: BTreeMap<(u64, String, u32), (f64, Vec<String>)> = BTreeMap::new();
    let mut abstain: BTreeMap<u64, (f64, usize, usize)> = BTreeMap::new();
    for lt in trials {
        let key = level_key(lt.level);
        let a = abstain.entry(key).or_insert((lt.level, 0, 0));
        a.2 += 1;
        if lt.trial.abstained {
            a.1 += 1;
            continue;
        }
        groups
            .entry((key, lt.trial.input_id.clone(), lt.trial.variant_id))
            .or_insert((lt.level, Vec::new()))
            .1
            .push(lt.trial.output.label());
    }
    let mut entropy_levels: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
    let mut all_entropies = Vec::new();
    for ((key, _, _), (level, labels)) in &groups {
        let h = stats::entropy_bits(labels.iter().map(String::as_str));
        all_entropies.push(h);
        entropy_levels.entry(*key).or_insert((*level, Vec::new())).1.push(h);
    }

    let mut confident: Vec<(&Trial, f64)> = trials
        .iter()
        .filter(|lt| !lt.trial.abstained)
        .filter_map(|lt| lt.trial.confidence.map(|c| (&lt.trial, c)))
        .collect();
    let answered = trials.iter().filter(|lt| !lt.trial.abstained).count();
    if confident.is_empty() {
        return Err(Error::InsufficientData("no trial reports a confidence".into()));
    }
    confident.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| a.0.input_id.cmp(&b.0.input_id))
            .then_with(|| a.0.variant_id.cmp(&b.0.variant_id))
            .then_with(|| a.0.seed.cmp(&b.0.seed))
            .then_with(|| a.0.trial_id.cmp(&b.0.trial_id))
    });
    let disagrees: Vec<bool> = confident
        .iter()
        .map(|(t, _)| consensus.get(&t.input_id).is_none_or(|c| *c != t.output.label()))
        .collect();
    let n = disagrees.len();
    let selective_disagreement = coverages
        .iter()
        .map(|&c| {
            let keep = ((c * n as f64).ceil() as usize).clamp(1, n);
            let bad = disagrees[..keep].iter().filter(|d| **d).count();
            (c, bad as f64 / keep as f64)
        })
        .collect();

    let total = trials.len();
    let abstained = trials.iter().filter(|lt| lt.trial.abstained).count();
    Ok(UncertaintyProfile {
        mean_entropy: stats::mean(&all_entropies).unwrap_or(0.0),
        entropy_by_level: entropy_levels
            .into_values()
            .map(|(l, hs)| (l, stats::mean(&hs).unwrap_or(0.0)))
            .collect(),
        abstain_rate: abstained as f64 / total as f64,
        abstain_by_level: abstain
            .into_values()
            .map(|(l, a, t)| (l, a as f64 / t as f64))
            .collect(),
        selective_disagreement,
        missing_confidence: answered - n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapters::Controls;
    use crate::similarity::Output;

    fn lt(level: f64, input: &str, seed: u64, out: &str, conf: Option<f64>, abstained: bool) -> LeveledTrial {
        LeveledTrial {
            level,
            trial: Trial {
                trial_id: format!("{input}/{seed}"),
                system_id: "s".into(),
                input_id: input.into(),
                variant_id: if level > 0.0 { 1 } else { 0 },
                controls: Controls::new(),
                seed,
                output: Output::Text(out.into()),
                confidence: conf,
                abstained,
                latency_ms: 0.0,
                log_score: None,
            },
        }
    }

    #[test]
    fn uniform_binary_entropy_is_one_bit() {
        let t = vec![lt(0.0, "a", 0, "yes", Some(0.9), false), lt(0.0, "a", 1, "no", Some(0.8), false)];
        let c = consensus_labels(t.iter().map(|x| &x.trial));
        let p = uncertainty_profile(&t, &c, &DEFAULT_COVERAGES).unwrap();
        assert_eq!(p.mean_entropy, 1.0);
    }

    #[test]
    fn full_agreement_has_zero_disagreement() {
        let t: Vec<LeveledTrial> = (0..6).map(|s| lt(0.0, "a", s, "yes", Some(0.1 * s as f64), false)).collect();
        let c = consensus_labels(t.iter().map(|x| &x.trial));
        let p = uncertainty_profile(&t, &c, &DEFAULT_COVERAGES).unwrap();
        assert!(p.selective_disagreement.iter().all(|(_, d)| *d == 0.0));
    }

    #[test]
    fn abstain_curve_by_level() {
        let mut t = Vec::new();
        for s in 0..4 {
            t.push(lt(0.0, "a", s, "yes", Some(0.9), false));
            t.push(lt(1.0, "a", s, "", None, true));
        }
        let c = consensus_labels(t.iter().map(|x| &x.trial));
        let p = uncertainty_profile(&t, &c, &DEFAULT_COVERAGES).unwrap();
        assert_eq!(p.abstain_by_level, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(p.abstain_rate, 0.5);
    }

    #[test]
    fn full_coverage_equals_unconditional_rate() {
        let t = vec![
            lt(0.0, "a", 0, "yes", Some(0.9), false),
            lt(0.0, "a", 1, "yes", Some(0.5), false),
            lt(0.0, "a", 2, "no", Some(0.2), false),
            lt(0.0, "b", 0, "no", Some(0.7), false),
        ];
        let c = consensus_labels(t.iter().map(|x| &x.trial));
        let p = uncertainty_profile(&t, &c, &[0.25, 1.0]).unwrap();
        assert_eq!(p.selective_disagreement[1], (1.0, 0.25));
        assert_eq!(p.selective_disagreement[0], (0.25, 0.0));
    }

    #[test]
    fn no_confidence_is_insufficient() {
        let t = vec![lt(0.0, "a", 0, "yes", None, false)];
        assert!(matches!(
            uncertainty_profile(&t, &BTreeMap::new(), &DEFAULT_COVERAGES),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn consensus_tie_breaks_lexicographically() {
        let t = [lt(0.0, "a", 0, "b", None, false), lt(0.0, "a", 1, "a", None, false)];
        assert_eq!(consensus_labels(t.iter().map(|x| &x.trial))["a"], "a");
    }
}
