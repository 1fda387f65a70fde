use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::adapters::Trial;
use crate::assumptions::AssumptionLedger;
use crate::catalog;
use crate::error::{Error, Result};
use crate::similarity::{similarity, Output, SimilarityKind};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyScore {
    pub mean_pairwise_similarity: f64,
    /// Sample standard deviation for numeric outputs, `1 − similarity` for text.
    pub dispersion: f64,
    pub n_runs: usize,
}

/// Mean similarity over all unordered pairs.
pub(crate) fn mean_pairwise(outputs: &[&Output], kind: SimilarityKind) -> Result<f64> {
    let mut sims = Vec::with_capacity(outputs.len() * outputs.len().saturating_sub(1) / 2);
    for i in 0..outputs.len() {
        for j in i + 1..outputs.len() {
            sims.push(similarity(outputs[i], outputs[j], kind)?);
        }
    }
    stats::mean(&sims).ok_or_else(|| Error::InsufficientData("need at least two outputs".into()))
}

/// Repeat-run agreement of one system on one input.
pub fn self_consistency(trials: &[Trial], kind: SimilarityKind) -> Result<ConsistencyScore> {
    if trials.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "self-consistency needs at least 2 trials, got {}",
            trials.len()
        )));
    }
    let first = &trials[0];
    for t in &trials[1..] {
        if t.system_id != first.system_id
            || t.input_id != first.input_id
            || t.variant_id != first.variant_id
            || t.controls != first.controls
        {
            return Err(Error::InvalidComparison(format!(
                "trial `{}` differs from `{}` in more than the seed",
                t.trial_id, first.trial_id
            )));
        }
    }
    let mut seeds: Vec<u64> = trials.iter().map(|t| t.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    if seeds.len() != trials.len() {
        return Err(Error::InvalidComparison("repeat trials must use distinct seeds".into()));
    }
    let outputs: Vec<&Output> = trials.iter().map(|t| &t.output).collect();
    let mean = mean_pairwise(&outputs, kind)?;
    let numbers: Option<Vec<f64>> = outputs.iter().map(|o| o.as_number()).collect();
    let dispersion = match numbers {
        Some(v) => stats::sample_std(&v),
        None => 1.0 - mean,
    };
    Ok(ConsistencyScore {
        mean_pairwise_similarity: mean,
        dispersion,
        n_runs: trials.len(),
    })
}

/// ICC(1,1), one-way random effects, over an items × runs matrix.
pub fn intraclass_correlation(scores: &[Vec<f64>]) -> Result<f64> {
    let n = scores.len();
    if n < 2 {
        return Err(Error::InsufficientData("ICC needs at least two items".into()));
    }
    let k = scores[0].len();
    if k < 2 {
        return Err(Error::InsufficientData("ICC needs at least two runs per item".into()));
    }
    if scores.iter().any(|row| row.len() != k) {
        return Err(Error::InvalidComparison("ICC rows must all have the same number of runs".into()));
    }
    if scores.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidComparison("ICC scores must be finite".into()));
    }
    let row_means: Vec<f64> = scores
        .iter()
        .map(|row| stats::sum(row.iter().copied()) / k as f64)
        .collect();
    let grand = stats::sum(row_means.iter().copied()) / n as f64;
    let ssb = k as f64 * stats::sum(row_means.iter().map(|m| (m - grand) * (m - grand)));
    let ssw = stats::sum(
        scores
            .iter()
            .zip(&row_means)
            .flat_map(|(row, m)| row.iter().map(move |v| (v - m) * (v - m))),
    );
    let msb = ssb / (n - 1) as f64;
    let msw = ssw / (n * (k - 1)) as f64;
    let denom = msb + (k - 1) as f64 * msw;
    if denom == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok((msb - msw) / denom)
}

/// Mean pairwise similarity across systems, averaged over inputs.
///
/// Each element of `per_input` maps system id → output for one input. Inputs
/// with fewer than two outputs are ignored.
pub fn cross_consensus(
    per_input: &[BTreeMap<String, Output>],
    kind: SimilarityKind,
    ledger: &AssumptionLedger,
) -> Result<f64> {
    ledger.gate(catalog::CROSS_CONSENSUS)?;
    let mut systems = std::collections::BTreeSet::new();
    let mut per_input_means = Vec::new();
    for outputs in per_input {
        systems.extend(outputs.keys().cloned());
        if outputs.len() < 2 {
            continue;
        }
        let v: Vec<&Output> = outputs.values().collect();
        per_input_means.push(mean_pairwise(&v, kind)?);
    }
    if systems.len() < 2 {
        return Err(Error::InsufficientData("cross-consensus needs at least two systems".into()));
    }
    stats::mean(&per_input_means)
        .ok_or_else(|| Error::InsufficientData("no input has outputs from two systems".into()))
}

/// `1 − mean pairwise similarity` for a single input's outputs.
pub fn disagreement(outputs: &BTreeMap<String, Output>, kind: SimilarityKind) -> Result<f64> {
    let v: Vec<&Output> = outputs.values().collect();
    Ok(1.0 - mean_pairwise(&v, kind)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapters::Controls;
    use crate::assumptions::{validate_assumptions, ProvenanceRelation, Relation};

    fn trial(out: Output, seed: u64) -> Trial {
        Trial {
            trial_id: format!("t{seed}"),
            system_id: "s".into(),
            input_id: "i".into(),
            variant_id: 0,
            controls: Controls::new(),
            seed,
            output: out,
            confidence: None,
            abstained: false,
            latency_ms: 0.0,
            log_score: None,
        }
    }

    #[test]
    fn identical_outputs_are_perfectly_consistent() {
        let t: Vec<Trial> = (0..3).map(|s| trial(Output::Text("x".into()), s)).collect();
        let c = self_consistency(&t, SimilarityKind::ExactLabel).unwrap();
        assert_eq!(c.mean_pairwise_similarity, 1.0);
        assert_eq!(c.dispersion, 0.0);
        let n: Vec<Trial> = (0..3).map(|s| trial(Output::Number(3.0), s)).collect();
        let c = self_consistency(&n, SimilarityKind::numeric_proximity(4.0).unwrap()).unwrap();
        assert_eq!(c.dispersion, 0.0);
    }

    #[test]
    fn self_consistency_preconditions() {
        assert!(matches!(
            self_consistency(&[trial(Output::Number(1.0), 0)], SimilarityKind::ExactLabel),
            Err(Error::InsufficientData(_))
        ));
        let dup = [trial(Output::Number(1.0), 0), trial(Output::Number(1.0), 0)];
        assert!(self_consistency(&dup, SimilarityKind::ExactLabel).is_err());
    }

    /// Direct one-way ANOVA: SST split into between and within parts.
    fn anova_icc(m: &[Vec<f64>]) -> f64 {
        let n = m.len() as f64;
        let k = m[0].len() as f64;
        let all: Vec<f64> = m.iter().flatten().copied().collect();
        let grand = all.iter().sum::<f64>() / (n * k);
        let sst: f64 = all.iter().map(|v| (v - grand).powi(2)).sum();
        let ssw: f64 = m
            .iter()
            .map(|r| {
                let mu = r.iter().sum::<f64>() / k;
                r.iter().map(|v| (v - mu).powi(2)).sum::<f64>()
            })
            .sum();
        let ssb = sst - ssw;
        let msb = ssb / (n - 1.0);
        let msw = ssw / (n * (k - 1.0));
        (msb - msw) / (msb + (k - 1.0) * msw)
    }

    #[test]
    fn icc_examples() {
        assert_eq!(intraclass_correlation(&[vec![1.0, 1.0], vec![3.0, 3.0]]).unwrap(), 1.0);
        // [[1,2],[2,1]]: MSB = 0, MSW = 0.5 → (0 − 0.5)/(0 + 0.5) = −1.
        let m = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert_eq!(anova_icc(&m), -1.0);
        assert!((intraclass_correlation(&m).unwrap() - anova_icc(&m)).abs() < 1e-12);
        assert!(matches!(
            intraclass_correlation(&[vec![2.0, 2.0], vec![2.0, 2.0]]),
            Err(Error::DegenerateVariance)
        ));
    }

    #[test]
    fn icc_of_pure_noise_is_not_positive_on_average() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut acc = 0.0;
        for _ in 0..200 {
            let m: Vec<Vec<f64>> = (0..8).map(|_| (0..4).map(|_| rng.gen::<f64>()).collect()).collect();
            acc += intraclass_correlation(&m).unwrap();
        }
        assert!(acc / 200.0 <= 0.0);
    }

    fn per_input(rows: &[&[(&str, &str)]]) -> Vec<BTreeMap<String, Output>> {
        rows.iter()
            .map(|r| r.iter().map(|(s, o)| (s.to_string(), Output::Text(o.to_string()))).collect())
            .collect()
    }

    #[test]
    fn cross_consensus_examples() {
        let ledger = AssumptionLedger::new();
        let same = per_input(&[&[("a", "x"), ("b", "x")], &[("a", "y"), ("b", "y")]]);
        assert_eq!(cross_consensus(&same, SimilarityKind::ExactLabel, &ledger).unwrap(), 1.0);
        let disjoint = per_input(&[&[("a", "x"), ("b", "y")]]);
        assert_eq!(cross_consensus(&disjoint, SimilarityKind::ExactLabel, &ledger).unwrap(), 0.0);
        // pairs AB, AC, BC: only AB agrees → 1/3.
        let three = per_input(&[&[("a", "x"), ("b", "x"), ("c", "z")], &[("a", "q"), ("b", "q"), ("c", "r")]]);
        let got = cross_consensus(&three, SimilarityKind::ExactLabel, &ledger).unwrap();
        assert!((got - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cross_consensus_is_gated_by_provenance() {
        let ledger = validate_assumptions(
            &["a".into(), "b".into()],
            &[ProvenanceRelation { a: "a".into(), b: "b".into(), relation: Relation::DistilledFrom }],
        );
        let same = per_input(&[&[("a", "x"), ("b", "x")]]);
        assert!(matches!(
            cross_consensus(&same, SimilarityKind::ExactLabel, &ledger),
            Err(Error::MethodInadmissible { .. })
        ));
    }
}
