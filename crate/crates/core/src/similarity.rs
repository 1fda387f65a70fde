//! Output values and the lexical/numeric similarity judges.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A system's observable answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Output {
    Number(f64),
    Text(String),
}

impl Output {
    pub fn empty() -> Self {
        Output::Text(String::new())
    }

    /// Numbers when the cell parses as a finite float, text otherwise.
    pub fn parse(cell: &str) -> Self {
        match cell.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Output::Number(v),
            _ => Output::Text(cell.to_string()),
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Output::Number(v) => Some(*v),
            Output::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Output::Text(s) => Some(s),
            Output::Number(_) => None,
        }
    }

    /// Canonical label used for entropy and modal-consensus computations.
    pub fn label(&self) -> String {
        match self {
            Output::Number(v) => format!("{v}"),
            Output::Text(s) => s.trim().to_lowercase(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Output::Number(_) => "number",
            Output::Text(_) => "text",
        }
    }
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Output::Number(v) => write!(f, "{v}"),
            Output::Text(s) => f.write_str(s),
        }
    }
}

/// Lowercased whitespace tokens.
pub fn tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Anything that can score the similarity of two outputs in `[0, 1]`.
///
/// The shipped judges are the lexical [`SimilarityKind`]s. Embedding or
/// contradiction judges plug in by implementing this trait.
pub trait Judge: Send + Sync {
    fn name(&self) -> String;
    fn similarity(&self, a: &Output, b: &Output) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimilarityKind {
    /// Trimmed, case-insensitive equality for text; value equality for numbers.
    ExactLabel,
    TokenJaccard,
    NormalizedEdit,
    NumericProximity { scale: f64 },
}

impl SimilarityKind {
    pub fn numeric_proximity(scale: f64) -> Result<Self> {
        if scale.is_finite() && scale > 0.0 {
            Ok(SimilarityKind::NumericProximity { scale })
        } else {
            Err(Error::Config(format!(
                "numeric-proximity scale must be positive, got {scale}"
            )))
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, SimilarityKind::NumericProximity { .. })
    }
}

impl fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimilarityKind::ExactLabel => f.write_str("exact-label"),
            SimilarityKind::TokenJaccard => f.write_str("token-jaccard"),
            SimilarityKind::NormalizedEdit => f.write_str("normalized-edit"),
            SimilarityKind::NumericProximity { scale } => write!(f, "numeric-proximity:{scale}"),
        }
    }
}

impl FromStr for SimilarityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exact-label" => Ok(SimilarityKind::ExactLabel),
            "token-jaccard" => Ok(SimilarityKind::TokenJaccard),
            "normalized-edit" => Ok(SimilarityKind::NormalizedEdit),
            other => {
                if let Some(scale) = other.strip_prefix("numeric-proximity:") {
                    let scale: f64 = scale.parse().map_err(|_| {
                        Error::Config(format!("bad numeric-proximity scale `{scale}`"))
                    })?;
                    SimilarityKind::numeric_proximity(scale)
                } else {
                    Err(Error::Config(format!("unknown similarity kind `{other}`")))
                }
            }
        }
    }
}

impl Serialize for SimilarityKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SimilarityKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn require_text<'a>(kind: SimilarityKind, o: &'a Output) -> Result<&'a str> {
    o.as_text().ok_or_else(|| {
        Error::InvalidComparison(format!("{kind} requires text outputs, got a number"))
    })
}

fn require_number(kind: SimilarityKind, o: &Output) -> Result<f64> {
    match o {
        Output::Number(v) if v.is_finite() => Ok(*v),
        Output::Number(_) => Err(Error::InvalidComparison(format!(
            "{kind} requires finite numbers"
        ))),
        Output::Text(_) => Err(Error::InvalidComparison(format!(
            "{kind} requires numeric outputs, got text"
        ))),
    }
}

pub fn similarity(a: &Output, b: &Output, kind: SimilarityKind) -> Result<f64> {
    match kind {
        SimilarityKind::ExactLabel => match (a, b) {
            (Output::Text(x), Output::Text(y)) => {
                Ok(if x.trim().to_lowercase() == y.trim().to_lowercase() {
                    1.0
                } else {
                    0.0
                })
            }
            (Output::Number(x), Output::Number(y)) => Ok(if x == y { 1.0 } else { 0.0 }),
            _ => Err(Error::InvalidComparison(
                "exact-label cannot compare text with a number".into(),
            )),
        },
        SimilarityKind::TokenJaccard => {
            let x: BTreeSet<String> = tokens(require_text(kind, a)?).into_iter().collect();
            let y: BTreeSet<String> = tokens(require_text(kind, b)?).into_iter().collect();
            let union = x.union(&y).count();
            if union == 0 {
                return Ok(1.0);
            }
            Ok(x.intersection(&y).count() as f64 / union as f64)
        }
        SimilarityKind::NormalizedEdit => {
            let x = require_text(kind, a)?;
            let y = require_text(kind, b)?;
            let longest = x.chars().count().max(y.chars().count());
            if longest == 0 {
                return Ok(1.0);
            }
            Ok(1.0 - levenshtein(x, y) as f64 / longest as f64)
        }
        SimilarityKind::NumericProximity { scale } => {
            let x = require_number(kind, a)?;
            let y = require_number(kind, b)?;
            Ok((1.0 - (x - y).abs() / scale).max(0.0))
        }
    }
}

impl Judge for SimilarityKind {
    fn name(&self) -> String {
        self.to_string()
    }

    fn similarity(&self, a: &Output, b: &Output) -> Result<f64> {
        similarity(a, b, *self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Output {
        Output::Text(s.into())
    }

    #[test]
    fn exact_label_identity() {
        assert_eq!(similarity(&t("alpha"), &t("alpha"), SimilarityKind::ExactLabel).unwrap(), 1.0);
        assert_eq!(similarity(&t("alpha"), &t("beta"), SimilarityKind::ExactLabel).unwrap(), 0.0);
    }

    #[test]
    fn jaccard_matches_set_oracle() {
        // {a,b,c} ∩ {a,b,d} = {a,b}; union has four tokens.
        let got = similarity(&t("a b c"), &t("a b d"), SimilarityKind::TokenJaccard).unwrap();
        assert_eq!(got, 0.5);
        assert_eq!(similarity(&t("a b"), &t("c d"), SimilarityKind::TokenJaccard).unwrap(), 0.0);
    }

    #[test]
    fn numeric_proximity_identity_and_clamp() {
        let k = SimilarityKind::numeric_proximity(4.0).unwrap();
        assert_eq!(similarity(&Output::Number(3.0), &Output::Number(3.0), k).unwrap(), 1.0);
        assert_eq!(similarity(&Output::Number(1.0), &Output::Number(3.0), k).unwrap(), 0.5);
        assert_eq!(similarity(&Output::Number(0.0), &Output::Number(9.0), k).unwrap(), 0.0);
    }

    #[test]
    fn type_mismatch_is_invalid_comparison() {
        let k = SimilarityKind::numeric_proximity(1.0).unwrap();
        assert!(matches!(similarity(&t("3"), &Output::Number(3.0), k), Err(Error::InvalidComparison(_))));
        assert!(matches!(
            similarity(&Output::Number(1.0), &Output::Number(1.0), SimilarityKind::TokenJaccard),
            Err(Error::InvalidComparison(_))
        ));
        assert!(SimilarityKind::numeric_proximity(0.0).is_err());
    }

    #[test]
    fn edit_distance() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        let s = similarity(&t("abcd"), &t("abce"), SimilarityKind::NormalizedEdit).unwrap();
        assert_eq!(s, 0.75);
    }

    #[test]
    fn kind_round_trips_through_text() {
        for k in ["exact-label", "token-jaccard", "normalized-edit", "numeric-proximity:4"] {
            assert_eq!(k.parse::<SimilarityKind>().unwrap().to_string(), k);
        }
        assert!("embedding".parse::<SimilarityKind>().is_err());
    }
}
