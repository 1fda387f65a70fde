//! Control suites for the similarity judges.

use serde::{Deserialize, Serialize};

use crate::similarity::{similarity, Output, SimilarityKind};

/// Fraction of ordering checks a judge must win to pass.
pub const PASS_FRACTION: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteCase {
    pub name: String,
    pub anchor: Output,
    /// Same meaning as the anchor (paraphrase or reordering).
    pub related: Output,
    pub unrelated: Output,
}

impl SuiteCase {
    fn new(name: &str, anchor: Output, related: Output, unrelated: Output) -> Self {
        Self {
            name: name.into(),
            anchor,
            related,
            unrelated,
        }
    }

    fn text(name: &str, anchor: &str, related: &str, unrelated: &str) -> Self {
        Self::new(name, Output::Text(anchor.into()), Output::Text(related.into()), Output::Text(unrelated.into()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseScore {
    pub name: String,
    pub related: Option<f64>,
    pub unrelated: Option<f64>,
    pub ordered: bool,
    pub identity: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeReport {
    pub judge: SimilarityKind,
    pub pass: bool,
    pub ordered_fraction: f64,
    pub identity_ok: bool,
    pub cases: Vec<CaseScore>,
}

const TEXT_PARAPHRASE: [(&str, &str, &str); 6] = [
    (
        "claims above the limit need manager review",
        "claims above the limit need a manager review",
        "the cafeteria opens at noon on fridays",
    ),
    (
        "late receipts are rejected without exception",
        "late receipts are always rejected",
        "our team won the football match",
    ),
    (
        "travel must be booked through the portal",
        "travel must be booked via the portal",
        "please water the plants twice a week",
    ),
    (
        "the applicant meets every listed requirement",
        "the applicant meets each listed requirement",
        "snow is expected in the mountains",
    ),
    (
        "refunds are issued within ten working days",
        "refunds are issued in ten working days",
        "the printer on floor two is jammed",
    ),
    (
        "the contract renews automatically each year",
        "the contract renews automatically every year",
        "bring a jacket for the evening walk",
    ),
];

const TEXT_REORDER: [(&str, &str, &str); 4] = [
    (
        "budget approved and hiring paused",
        "hiring paused and budget approved",
        "the river flooded the lower fields",
    ),
    (
        "risk is low but cost is high",
        "cost is high but risk is low",
        "dinner will be served at eight",
    ),
    (
        "review the draft then sign the form",
        "sign the form then review the draft",
        "a quiet morning by the lake",
    ),
    (
        "quality holds while costs fall",
        "costs fall while quality holds",
        "the museum closes for renovation",
    ),
];

/// Paraphrase, reorder and unrelated cases suited to `judge`.
pub fn bundled_suite(judge: SimilarityKind) -> Vec<SuiteCase> {
    match judge {
        SimilarityKind::TokenJaccard | SimilarityKind::NormalizedEdit => {
            let para = TEXT_PARAPHRASE
                .iter()
                .enumerate()
                .map(|(i, (a, r, u))| SuiteCase::text(&format!("paraphrase-{i}"), a, r, u));
            let reorder = TEXT_REORDER
                .iter()
                .enumerate()
                .map(|(i, (a, r, u))| SuiteCase::text(&format!("reorder-{i}"), a, r, u));
            para.chain(reorder).collect()
        }
        SimilarityKind::ExactLabel => [
            ("accept", " Accept", "reject"),
            ("reject", "REJECT ", "accept"),
            ("escalate", "Escalate", "approve"),
            ("approve", "approve  ", "escalate"),
            ("needs review", "Needs Review", "no review"),
        ]
        .iter()
        .enumerate()
        .map(|(i, (a, r, u))| SuiteCase::text(&format!("label-variant-{i}"), a, r, u))
        .collect(),
        SimilarityKind::NumericProximity { scale } => [1.0, 2.5, 3.0, 4.0, 5.0, -2.0, 0.0, 10.0]
            .iter()
            .enumerate()
            .map(|(i, a)| {
                SuiteCase::new(
                    &format!("numeric-{i}"),
                    Output::Number(*a),
                    Output::Number(a + 0.1 * scale),
                    Output::Number(a + 2.0 * scale),
                )
            })
            .collect(),
    }
}

/// Runs the suite: the judge passes iff every suite output is maximally
/// similar to itself and related beats unrelated in at least 95% of cases.
/// Comparison errors count as failed checks.
pub fn judge_reliability(judge: SimilarityKind, suite: &[SuiteCase]) -> JudgeReport {
    let sim = |a: &Output, b: &Output| similarity(a, b, judge).ok();
    let cases: Vec<CaseScore> = suite
        .iter()
        .map(|c| {
            let related = sim(&c.anchor, &c.related);
            let unrelated = sim(&c.anchor, &c.unrelated);
            let identity = [&c.anchor, &c.related, &c.unrelated].iter().all(|o| sim(o, o) == Some(1.0));
            CaseScore {
                name: c.name.clone(),
                related,
                unrelated,
                ordered: matches!((related, unrelated), (Some(r), Some(u)) if r > u),
                identity,
            }
        })
        .collect();
    let ordered = cases.iter().filter(|c| c.ordered).count();
    let ordered_fraction = if cases.is_empty() { 0.0 } else { ordered as f64 / cases.len() as f64 };
    let identity_ok = !cases.is_empty() && cases.iter().all(|c| c.identity);
    JudgeReport {
        judge,
        pass: identity_ok && ordered_fraction >= PASS_FRACTION,
        ordered_fraction,
        identity_ok,
        cases,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn all_judges() -> Vec<SimilarityKind> {
        vec![
            SimilarityKind::ExactLabel,
            SimilarityKind::TokenJaccard,
            SimilarityKind::NormalizedEdit,
            SimilarityKind::NumericProximity { scale: 4.0 },
        ]
    }

    #[test]
    fn bundled_suites_pass_their_judges() {
        for j in all_judges() {
            let r = judge_reliability(j, &bundled_suite(j));
            assert!(r.pass, "{j}: {r:?}");
            assert_eq!(r.ordered_fraction, 1.0);
        }
    }

    #[test]
    fn disjoint_tokens_score_zero() {
        let a = Output::Text("a b".into());
        let b = Output::Text("c d".into());
        assert_eq!(similarity(&a, &b, SimilarityKind::TokenJaccard).unwrap(), 0.0);
    }

    fn levenshtein_oracle(a: &str, b: &str) -> usize {
        // full-matrix recurrence over chars
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for j in 0..=b.len() {
            d[0][j] = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
                d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
            }
        }
        d[a.len()][b.len()]
    }

    fn edit_oracle(a: &str, b: &str) -> f64 {
        let m = a.chars().count().max(b.chars().count());
        if m == 0 { 1.0 } else { 1.0 - levenshtein_oracle(a, b) as f64 / m as f64 }
    }

    #[test]
    fn normalized_edit_pass_fraction_matches_recount() {
        let mut suite = bundled_suite(SimilarityKind::NormalizedEdit);
        // a case the edit judge gets backwards: the unrelated text is a near copy
        suite.push(SuiteCase::text("adversarial", "cost is high", "high cost", "cost is nigh"));
        let r = judge_reliability(SimilarityKind::NormalizedEdit, &suite);
        let oracle = suite
            .iter()
            .filter(|c| {
                let t = |o: &Output| o.as_text().unwrap().to_string();
                edit_oracle(&t(&c.anchor), &t(&c.related)) > edit_oracle(&t(&c.anchor), &t(&c.unrelated))
            })
            .count();
        assert_eq!(r.ordered_fraction, oracle as f64 / suite.len() as f64);
        assert!(oracle < suite.len());
        assert!(!r.pass);
    }

    #[test]
    fn type_mismatch_fails_instead_of_erroring() {
        let r = judge_reliability(SimilarityKind::TokenJaccard, &bundled_suite(SimilarityKind::NumericProximity { scale: 1.0 }));
        assert!(!r.pass);
        assert!(!r.identity_ok);
        assert_eq!(r.ordered_fraction, 0.0);
    }

    #[test]
    fn exact_label_identity() {
        let r = judge_reliability(SimilarityKind::ExactLabel, &bundled_suite(SimilarityKind::ExactLabel));
        assert!(r.identity_ok);
        let names: BTreeSet<&str> = r.cases.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names.len(), r.cases.len());
    }
}
