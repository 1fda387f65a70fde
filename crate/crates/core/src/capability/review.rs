use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::assumptions::AssumptionLedger;
use crate::catalog;
use crate::error::{Error, Result};

pub const SCALE_MIN: f64 = 1.0;
pub const SCALE_MAX: f64 = 5.0;
/// Score gap above which a third reviewer is called in.
pub const DEFAULT_TRIGGER_THRESHOLD: f64 = 1.0;
pub const DEFAULT_AGREEMENT_TOLERANCE: f64 = 0.5;

/// Criterion weights on a 1–5 scale; weights are normalised on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct WeightedRubric {
    criteria: BTreeMap<String, f64>,
}

impl WeightedRubric {
    pub fn new<K: Into<String>>(weights: impl IntoIterator<Item = (K, f64)>) -> Result<Self> {
        let raw: Vec<(String, f64)> = weights.into_iter().map(|(k, w)| (k.into(), w)).collect();
        if raw.is_empty() {
            return Err(Error::Config("rubric needs at least one criterion".into()));
        }
        if let Some((k, w)) = raw.iter().find(|(_, w)| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Config(format!("rubric weight for `{k}` must be positive, got {w}")));
        }
        let total: f64 = raw.iter().map(|(_, w)| w).sum();
        let mut criteria = BTreeMap::new();
        for (k, w) in raw {
            if criteria.insert(k.clone(), w / total).is_some() {
                return Err(Error::Config(format!("duplicate rubric criterion `{k}`")));
            }
        }
        Ok(Self { criteria })
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.criteria
    }
}

impl TryFrom<BTreeMap<String, f64>> for WeightedRubric {
    type Error = Error;
    fn try_from(m: BTreeMap<String, f64>) -> Result<Self> {
        Self::new(m)
    }
}

impl From<WeightedRubric> for BTreeMap<String, f64> {
    fn from(r: WeightedRubric) -> Self {
        r.criteria
    }
}

pub fn weighted_score(scores: &BTreeMap<String, f64>, rubric: &WeightedRubric) -> Result<f64> {
    let mut total = 0.0;
    for (name, w) in &rubric.criteria {
        let s = *scores
            .get(name)
            .ok_or_else(|| Error::Config(format!("rubric mismatch: criterion `{name}` has no score")))?;
        if !(SCALE_MIN..=SCALE_MAX).contains(&s) {
            return Err(Error::Config(format!(
                "criterion `{name}` score {s} is outside [{SCALE_MIN}, {SCALE_MAX}]"
            )));
        }
        total += w * s;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReviewSource {
    HumanHuman,
    HumanAi,
    AiAi,
}

impl std::str::FromStr for ReviewSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "human-human" => Ok(Self::HumanHuman),
            "human-ai" => Ok(Self::HumanAi),
            "ai-ai" => Ok(Self::AiAi),
            other => Err(Error::Ingestion(format!("unknown review source `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewPair {
    pub input_id: String,
    pub score_a: f64,
    pub score_b: f64,
    pub source: ReviewSource,
}

impl ReviewPair {
    pub fn new(input_id: impl Into<String>, score_a: f64, score_b: f64, source: ReviewSource) -> Self {
        Self {
            input_id: input_id.into(),
            score_a,
            score_b,
            source,
        }
    }

    pub fn gap(&self) -> f64 {
        (self.score_a - self.score_b).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerSummary {
    pub rate: f64,
    pub triggered: Vec<String>,
}

/// Fraction of pairs whose weighted scores differ by strictly more than `threshold`.
pub fn trigger_rate(pairs: &[ReviewPair], threshold: f64) -> Result<TriggerSummary> {
    if !(threshold > 0.0) {
        return Err(Error::Config(format!("trigger threshold must be positive, got {threshold}")));
    }
    if pairs.is_empty() {
        return Err(Error::InsufficientData("no review pairs".into()));
    }
    let triggered: Vec<String> = pairs
        .iter()
        .filter(|p| p.gap() > threshold)
        .map(|p| p.input_id.clone())
        .collect();
    Ok(TriggerSummary {
        rate: triggered.len() as f64 / pairs.len() as f64,
        triggered,
    })
}

/// Fraction of pairs whose scores are within `tolerance` of each other.
pub fn agreement_rate(pairs: &[ReviewPair], tolerance: f64, ledger: &AssumptionLedger) -> Result<f64> {
    ledger.gate(catalog::AGREEMENT_RATE)?;
    if !(tolerance >= 0.0) {
        return Err(Error::Config(format!("agreement tolerance must be non-negative, got {tolerance}")));
    }
    if pairs.is_empty() {
        return Err(Error::InsufficientData("no review pairs".into()));
    }
    let agree = pairs.iter().filter(|p| p.gap() <= tolerance).count();
    Ok(agree as f64 / pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assumptions::{validate_assumptions, ProvenanceRelation, Relation};

    fn rubric(w: &[(&str, f64)]) -> WeightedRubric {
        WeightedRubric::new(w.iter().map(|(k, v)| (*k, *v))).unwrap()
    }

    fn scores(s: &[(&str, f64)]) -> BTreeMap<String, f64> {
        s.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn weighted_score_examples() {
        let s = scores(&[("q", 4.0), ("c", 2.0)]);
        assert_eq!(weighted_score(&s, &rubric(&[("q", 0.5), ("c", 0.5)])).unwrap(), 3.0);
        assert_eq!(weighted_score(&s, &rubric(&[("q", 2.0), ("c", 2.0)])).unwrap(), 3.0);
        assert_eq!(weighted_score(&scores(&[("q", 5.0)]), &rubric(&[("q", 1.0)])).unwrap(), 5.0);
        assert!(weighted_score(&scores(&[("q", 5.0)]), &rubric(&[("q", 1.0), ("c", 1.0)])).is_err());
    }

    #[test]
    fn rubric_rejects_bad_weights() {
        assert!(WeightedRubric::new(Vec::<(&str, f64)>::new()).is_err());
        assert!(WeightedRubric::new([("q", 0.0)]).is_err());
    }

    #[test]
    fn third_review_trigger() {
        let p = ReviewPair::new("d1", 4.0, 2.8, ReviewSource::HumanHuman);
        assert_eq!(trigger_rate(&[p.clone()], 1.0).unwrap().triggered, vec!["d1"]);
        let q = ReviewPair::new("d2", 3.0, 3.0, ReviewSource::HumanHuman);
        assert!(trigger_rate(&[q], 1.0).unwrap().triggered.is_empty());
        let r = ReviewPair::new("d3", 3.0, 3.4, ReviewSource::HumanAi);
        assert_eq!(trigger_rate(&[p, r], 1.0).unwrap().rate, 0.5);
        assert!(trigger_rate(&[], 1.0).is_err());
        assert!(trigger_rate(&[ReviewPair::new("x", 1.0, 1.0, ReviewSource::AiAi)], 0.0).is_err());
    }

    #[test]
    fn agreement_examples() {
        let l = AssumptionLedger::new();
        let same = vec![ReviewPair::new("a", 3.0, 3.0, ReviewSource::HumanAi); 3];
        assert_eq!(agreement_rate(&same, 0.5, &l).unwrap(), 1.0);
        let differ = vec![ReviewPair::new("a", 3.0, 3.5, ReviewSource::HumanAi); 3];
        assert_eq!(agreement_rate(&differ, 0.0, &l).unwrap(), 0.0);
        let gated = validate_assumptions(
            &["a".into(), "b".into()],
            &[ProvenanceRelation { a: "a".into(), b: "b".into(), relation: Relation::SharedTrainingData }],
        );
        assert!(matches!(agreement_rate(&same, 0.5, &gated), Err(Error::MethodInadmissible { .. })));
    }

    #[test]
    fn agreement_and_trigger_are_complementary() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20);
        let pairs: Vec<ReviewPair> = (0..20)
            .map(|i| ReviewPair::new(format!("d{i}"), rng.gen_range(1.0..5.0), rng.gen_range(1.0..5.0), ReviewSource::HumanAi))
            .collect();
        // brute-force complementary count
        let over = pairs.iter().filter(|p| (p.score_a - p.score_b).abs() > 1.0).count();
        let within = pairs.len() - over;
        assert!(pairs.iter().all(|p| (p.score_a - p.score_b).abs() != 1.0));
        let a = agreement_rate(&pairs, 1.0, &AssumptionLedger::new()).unwrap();
        let t = trigger_rate(&pairs, 1.0).unwrap().rate;
        assert_eq!(a, within as f64 / 20.0);
        assert_eq!(a + t, 1.0);
    }
}
