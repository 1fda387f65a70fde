use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::adapters::Trial;
use crate::error::{Error, Result};
use crate::perturb::VariantKind;
use crate::similarity::{similarity, SimilarityKind};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityScore {
    /// Variant kind name → mean similarity between original and variant outputs.
    pub per_kind: BTreeMap<String, f64>,
    pub overall: f64,
}

/// Output invariance under meaning-preserving variants.
pub fn input_stability(
    original: &Trial,
    variants: &[(VariantKind, Trial)],
    kind: SimilarityKind,
) -> Result<StabilityScore> {
    if variants.is_empty() {
        return Err(Error::InsufficientData("input stability needs at least one variant".into()));
    }
    let mut per_kind: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (vk, t) in variants {
        if !vk.preserves_semantics() {
            return Err(Error::InadmissibleVariant(format!(
                "{} variants do not preserve meaning",
                vk.name()
            )));
        }
        if t.system_id != original.system_id || t.controls != original.controls {
            return Err(Error::InvalidComparison(format!(
                "variant trial `{}` does not match the original's system and controls",
                t.trial_id
            )));
        }
        per_kind
            .entry(vk.name().to_string())
            .or_default()
            .push(similarity(&original.output, &t.output, kind)?);
    }
    let per_kind: BTreeMap<String, f64> = per_kind
        .into_iter()
        .map(|(k, v)| (k, stats::mean(&v).unwrap_or(0.0)))
        .collect();
    let overall = stats::mean(&per_kind.values().copied().collect::<Vec<_>>()).unwrap_or(0.0);
    Ok(StabilityScore { per_kind, overall })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlCurve {
    pub control: String,
    /// (control value, mean output) sorted by control value.
    pub points: Vec<(f64, f64)>,
    /// Zero when either axis is constant; see `flat`.
    pub spearman_rho: f64,
    pub flat: bool,
    pub adherence_rate: f64,
}

/// Spearman rank correlation; `None` when a side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    stats::pearson(&stats::average_ranks(x), &stats::average_ranks(y))
}

/// Probes a single control axis; `bounds` are the declared admissible output range.
pub fn control_stability(trials: &[Trial], bounds: Option<(f64, f64)>) -> Result<ControlCurve> {
    if trials.is_empty() {
        return Err(Error::InsufficientData("control probe has no trials".into()));
    }
    let names: BTreeSet<&String> = trials.iter().flat_map(|t| t.controls.keys()).collect();
    let varying: Vec<String> = names
        .iter()
        .filter(|name| {
            let mut vals = trials.iter().map(|t| t.controls.get(**name).copied());
            let first = vals.next().flatten();
            vals.any(|v| v != first)
        })
        .map(|s| s.to_string())
        .collect();
    if varying.len() > 1 {
        return Err(Error::ConfoundedProbe(varying));
    }
    let control = varying.into_iter().next().ok_or_else(|| {
        Error::InsufficientData("no control varies across the probe".into())
    })?;

    let mut by_value: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
    let mut inside = 0usize;
    for t in trials {
        let c = t.controls.get(&control).copied().ok_or_else(|| {
            Error::InvalidComparison(format!("trial `{}` lacks control `{control}`", t.trial_id))
        })?;
        let v = t.output.as_number().ok_or_else(|| {
            Error::InvalidComparison(format!("control probes need numeric outputs (trial `{}`)", t.trial_id))
        })?;
        if bounds.is_none_or(|(lo, hi)| v >= lo && v <= hi) {
            inside += 1;
        }
        // order-preserving key for finite floats
        let key = {
            let b = c.to_bits();
            if c.is_sign_negative() { !b } else { b | (1 << 63) }
        };
        by_value.entry(key).or_insert((c, Vec::new())).1.push(v);
    }
    if by_value.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "control `{control}` needs at least 3 distinct values, got {}",
            by_value.len()
        )));
    }
    let points: Vec<(f64, f64)> = by_value
        .into_values()
        .map(|(c, vs)| (c, stats::mean(&vs).unwrap_or(0.0)))
        .collect();
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let rho = spearman(&xs, &ys);
    Ok(ControlCurve {
        control,
        points,
        spearman_rho: rho.unwrap_or(0.0),
        flat: rho.is_none(),
        adherence_rate: inside as f64 / trials.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapters::Controls;
    use crate::similarity::Output;

    fn trial(controls: &[(&str, f64)], out: f64) -> Trial {
        let controls: Controls = controls.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        Trial {
            trial_id: format!("{controls:?}"),
            system_id: "s".into(),
            input_id: "i".into(),
            variant_id: 0,
            controls,
            seed: 0,
            output: Output::Number(out),
            confidence: None,
            abstained: false,
            latency_ms: 0.0,
            log_score: None,
        }
    }

    /// Classic formula 1 − 6Σd²/(n(n²−1)) for untied ranks.
    fn rho_oracle(x: &[f64], y: &[f64]) -> f64 {
        let rank = |v: &[f64]| -> Vec<f64> {
            v.iter().map(|a| 1.0 + v.iter().filter(|b| *b < a).count() as f64).collect()
        };
        let (rx, ry) = (rank(x), rank(y));
        let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
        let n = x.len() as f64;
        1.0 - 6.0 * d2 / (n * (n * n - 1.0))
    }

    #[test]
    fn rho_examples() {
        let inc: Vec<Trial> = [1.0, 2.0, 3.0, 4.0].iter().map(|c| trial(&[("t", *c)], c * 10.0)).collect();
        assert_eq!(control_stability(&inc, None).unwrap().spearman_rho, 1.0);

        let t = vec![trial(&[("t", 0.1)], 2.0), trial(&[("t", 0.2)], 1.0), trial(&[("t", 0.3)], 3.0)];
        assert_eq!(rho_oracle(&[0.1, 0.2, 0.3], &[2.0, 1.0, 3.0]), 0.5);
        let c = control_stability(&t, Some((0.0, 5.0))).unwrap();
        assert!((c.spearman_rho - 0.5).abs() < 1e-12);
        assert_eq!(c.adherence_rate, 1.0);
    }

    #[test]
    fn adherence_counts_violations() {
        let t = vec![trial(&[("t", 0.1)], 2.0), trial(&[("t", 0.2)], 9.0), trial(&[("t", 0.3)], 3.0)];
        let c = control_stability(&t, Some((0.0, 5.0))).unwrap();
        assert!((c.adherence_rate - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn confounded_and_short_probes() {
        let t = vec![trial(&[("t", 0.1), ("k", 1.0)], 2.0), trial(&[("t", 0.2), ("k", 2.0)], 1.0), trial(&[("t", 0.3), ("k", 3.0)], 3.0)];
        assert!(matches!(control_stability(&t, None), Err(Error::ConfoundedProbe(_))));
        let short = vec![trial(&[("t", 0.1)], 2.0), trial(&[("t", 0.2)], 1.0)];
        assert!(matches!(control_stability(&short, None), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn flat_outputs_are_flagged() {
        let t: Vec<Trial> = [1.0, 2.0, 3.0].iter().map(|c| trial(&[("t", *c)], 4.0)).collect();
        let c = control_stability(&t, None).unwrap();
        assert!(c.flat);
        assert_eq!(c.spearman_rho, 0.0);
    }

    fn st(out: &str, variant: u32) -> Trial {
        Trial { variant_id: variant, output: Output::Text(out.into()), ..trial(&[], 0.0) }
    }

    #[test]
    fn stability_examples() {
        let orig = st("accept", 0);
        let same = vec![(VariantKind::Redaction { fraction: 0.0 }, st("accept", 1)), (VariantKind::OrderShuffle, st("accept", 2))];
        let s = input_stability(&orig, &same, SimilarityKind::ExactLabel).unwrap();
        assert_eq!(s.overall, 1.0);
        let flipped = vec![(VariantKind::Redaction { fraction: 0.5 }, st("reject", 1))];
        assert_eq!(input_stability(&orig, &flipped, SimilarityKind::ExactLabel).unwrap().overall, 0.0);
        let noisy = vec![(VariantKind::NoiseInjection { rate: 0.3 }, st("accept", 1))];
        assert!(matches!(
            input_stability(&orig, &noisy, SimilarityKind::ExactLabel),
            Err(Error::InadmissibleVariant(_))
        ));
    }
}
