//! Seeded input transformations.
//!
//! Order shuffle, redaction and lexicon-driven synonym substitution preserve
//! meaning and feed input-stability tests. Noise injection does not; its
//! variants are tagged as ambiguity injection and only feed uncertainty metrics.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_for;

pub const MASK_TOKEN: &str = "[REDACTED]";
pub const DEFAULT_VARIANT_COUNT: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VariantKind {
    OrderShuffle,
    Redaction { fraction: f64 },
    SynonymSubstitution,
    NoiseInjection { rate: f64 },
}

impl VariantKind {
    pub fn name(&self) -> &'static str {
        match self {
            VariantKind::OrderShuffle => "order-shuffle",
            VariantKind::Redaction { .. } => "redaction",
            VariantKind::SynonymSubstitution => "synonym-substitution",
            VariantKind::NoiseInjection { .. } => "noise-injection",
        }
    }

    pub fn preserves_semantics(&self) -> bool {
        !matches!(self, VariantKind::NoiseInjection { .. })
    }

    /// Ambiguity level carried by a variant; zero for meaning-preserving kinds.
    pub fn ambiguity(&self) -> f64 {
        match self {
            VariantKind::NoiseInjection { rate } => *rate,
            _ => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let check = |what: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} {v} is outside [0, 1]")))
            }
        };
        match self {
            VariantKind::Redaction { fraction } => check("redaction fraction", *fraction),
            VariantKind::NoiseInjection { rate } => check("noise rate", *rate),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVariantSpec")]
pub struct VariantSpec {
    #[serde(flatten)]
    pub kind: VariantKind,
    #[serde(default = "default_count")]
    pub count: u32,
    #[serde(default)]
    pub seed: u64,
}

// flattened tagged enums cannot reject unknown keys, so specs are read flat
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVariantSpec {
    kind: String,
    #[serde(default)]
    fraction: Option<f64>,
    #[serde(default)]
    rate: Option<f64>,
    #[serde(default = "default_count")]
    count: u32,
    #[serde(default)]
    seed: u64,
}

impl TryFrom<RawVariantSpec> for VariantSpec {
    type Error = String;

    fn try_from(r: RawVariantSpec) -> std::result::Result<Self, String> {
        let stray = |what: &str, v: Option<f64>| match v {
            Some(_) => Err(format!("`{what}` does not apply to `{}` variants", r.kind)),
            None => Ok(()),
        };
        let need = |what: &str, v: Option<f64>| v.ok_or_else(|| format!("`{}` variants need `{what}`", r.kind));
        let kind = match r.kind.as_str() {
            "order-shuffle" => {
                stray("fraction", r.fraction)?;
                stray("rate", r.rate)?;
                VariantKind::OrderShuffle
            }
            "synonym-substitution" => {
                stray("fraction", r.fraction)?;
                stray("rate", r.rate)?;
                VariantKind::SynonymSubstitution
            }
            "redaction" => {
                stray("rate", r.rate)?;
                VariantKind::Redaction { fraction: need("fraction", r.fraction)? }
            }
            "noise-injection" => {
                stray("fraction", r.fraction)?;
                VariantKind::NoiseInjection { rate: need("rate", r.rate)? }
            }
            other => return Err(format!("unknown variant kind `{other}`")),
        };
        Ok(VariantSpec::new(kind, r.count, r.seed))
    }
}

fn default_count() -> u32 {
    DEFAULT_VARIANT_COUNT
}

impl VariantSpec {
    pub fn new(kind: VariantKind, count: u32, seed: u64) -> Self {
        Self { kind, count, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Config("variant count must be at least 1".into()));
        }
        self.kind.validate()
    }
}

/// Interchangeable token groups; lookups are case-insensitive.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    alternates: BTreeMap<String, Vec<String>>,
}

impl Lexicon {
    /// Every member of a group maps to the other members.
    pub fn from_groups<G, T>(groups: G) -> Result<Self>
    where
        G: IntoIterator<Item = Vec<T>>,
        T: Into<String>,
    {
        let mut alternates: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for group in groups {
            let group: Vec<String> = group
                .into_iter()
                .map(|t| t.into().trim().to_lowercase())
                .filter(|t| !t.is_empty())
                .collect();
            if group.len() < 2 {
                return Err(Error::Ingestion(format!(
                    "lexicon group {group:?} needs at least two tokens"
                )));
            }
            for t in &group {
                let entry = alternates.entry(t.clone()).or_default();
                for other in &group {
                    if other != t && !entry.contains(other) {
                        entry.push(other.clone());
                    }
                }
            }
        }
        Ok(Self { alternates })
    }

    /// One comma-separated group per line; the first token is the head.
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;
        let mut groups = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;
            let g: Vec<String> = rec.iter().filter(|s| !s.is_empty()).map(String::from).collect();
            if !g.is_empty() {
                groups.push(g);
            }
        }
        Self::from_groups(groups)
    }

    pub fn alternates(&self, token: &str) -> Option<&[String]> {
        self.alternates.get(&token.to_lowercase()).map(Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.alternates.is_empty()
    }
}

/// What a transform did, for auditability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformTrace {
    pub kind: String,
    /// Token positions (or sentence order for shuffles) touched by the transform.
    pub positions: Vec<usize>,
    pub changed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub variant_id: u32,
    pub text: String,
    pub kind: VariantKind,
    pub preserving: bool,
    pub trace: TransformTrace,
}

/// Splits on `.`, `!` or `?` followed by whitespace (or the end of the text).
pub fn sentence_split(doc: &str) -> Vec<String> {
    let mut units = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for tok in doc.split_whitespace() {
        current.push(tok);
        if tok.ends_with(['.', '!', '?']) {
            units.push(current.join(" "));
            current.clear();
        }
    }
    if !current.is_empty() {
        units.push(current.join(" "));
    }
    units
}

fn scramble(token: &str, rng: &mut impl Rng) -> String {
    let mut chars: Vec<char> = token.chars().collect();
    chars.shuffle(rng);
    let s: String = chars.iter().collect();
    if s == token && chars.len() > 1 {
        chars.reverse();
        chars.rotate_left(1);
    }
    chars.into_iter().collect()
}

/// Generates `spec.count` variants of `doc`, numbered from 1.
pub fn generate_variants(doc: &str, spec: &VariantSpec, lexicon: Option<&Lexicon>) -> Result<Vec<Variant>> {
    spec.validate()?;
    let tokens: Vec<&str> = doc.split_whitespace().collect();
    if tokens.is_empty() {
        return Err(Error::EmptyInput("cannot perturb an empty document".into()));
    }
    if spec.kind == VariantKind::SynonymSubstitution && lexicon.is_none() {
        return Err(Error::Config("synonym substitution requires a lexicon".into()));
    }
    let n = tokens.len();
    (1..=spec.count)
        .map(|variant_id| {
            let mut rng = rng_for(&[spec.seed, u64::from(variant_id)]);
            let (text, trace) = match spec.kind {
                VariantKind::OrderShuffle => {
                    let units = sentence_split(doc);
                    let mut order: Vec<usize> = (0..units.len()).collect();
                    order.shuffle(&mut rng);
                    let changed = order.iter().enumerate().filter(|(i, o)| i != *o).count();
                    let text = order.iter().map(|&i| units[i].as_str()).collect::<Vec<_>>().join(" ");
                    (text, TransformTrace { kind: "order-shuffle".into(), positions: order, changed })
                }
                VariantKind::Redaction { fraction } => {
                    let k = ((fraction * n as f64).ceil() as usize).min(n);
                    let mut positions = index::sample(&mut rng, n, k).into_vec();
                    positions.sort_unstable();
                    let mut out: Vec<&str> = tokens.clone();
                    for &p in &positions {
                        out[p] = MASK_TOKEN;
                    }
                    (out.join(" "), TransformTrace { kind: "redaction".into(), changed: positions.len(), positions })
                }
                VariantKind::SynonymSubstitution => {
                    let lex = lexicon.expect("checked above");
                    let mut positions = Vec::new();
                    let out: Vec<String> = tokens
                        .iter()
                        .enumerate()
                        .map(|(i, t)| match lex.alternates(t) {
                            Some(alts) => {
                                positions.push(i);
                                alts[rng.gen_range(0..alts.len())].clone()
                            }
                            None => (*t).to_string(),
                        })
                        .collect();
                    (out.join(" "), TransformTrace { kind: "synonym-substitution".into(), changed: positions.len(), positions })
                }
                VariantKind::NoiseInjection { rate } => {
                    let k = ((rate * n as f64).ceil() as usize).min(n);
                    let mut positions = index::sample(&mut rng, n, k).into_vec();
                    positions.sort_unstable();
                    let mut out: Vec<String> = tokens.iter().map(|t| t.to_string()).collect();
                    for &p in &positions {
                        out[p] = scramble(tokens[p], &mut rng);
                    }
                    (out.join(" "), TransformTrace { kind: "noise-injection".into(), changed: positions.len(), positions })
                }
            };
            Ok(Variant {
                variant_id,
                text,
                kind: spec.kind,
                preserving: spec.kind.preserves_semantics(),
                trace,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = "The proposal is strong. It has a clear plan! Is the budget sound?";

    fn multiset(s: &str) -> Vec<String> {
        let mut v: Vec<String> = s.split_whitespace().map(String::from).collect();
        v.sort();
        v
    }

    #[test]
    fn sentence_split_examples() {
        assert_eq!(sentence_split("A. B."), vec!["A.", "B."]);
        assert_eq!(sentence_split("No punctuation"), vec!["No punctuation"]);
        assert_eq!(sentence_split("X? Y! Z.").len(), 3);
        assert_eq!(sentence_split("3.5 is a number. ok"), vec!["3.5 is a number.", "ok"]);
    }

    #[test]
    fn redaction_zero_is_identity() {
        let v = generate_variants(DOC, &VariantSpec::new(VariantKind::Redaction { fraction: 0.0 }, 3, 1), None).unwrap();
        assert_eq!(v.len(), 3);
        assert!(v.iter().all(|x| x.text == DOC && x.trace.changed == 0));
        assert_eq!(v.iter().map(|x| x.variant_id).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn redaction_masks_ceiling_fraction() {
        let v = generate_variants(DOC, &VariantSpec::new(VariantKind::Redaction { fraction: 0.25 }, 1, 4), None).unwrap();
        let n = DOC.split_whitespace().count();
        let masks = v[0].text.split_whitespace().filter(|t| *t == MASK_TOKEN).count();
        assert_eq!(masks, (0.25 * n as f64).ceil() as usize);
        assert_eq!(v[0].text.split_whitespace().count(), n);
    }

    #[test]
    fn synonym_without_hits_is_identity() {
        let lex = Lexicon::from_groups([vec!["zebra", "okapi"]]).unwrap();
        let v = generate_variants(DOC, &VariantSpec::new(VariantKind::SynonymSubstitution, 2, 0), Some(&lex)).unwrap();
        assert!(v.iter().all(|x| x.text == DOC && x.trace.changed == 0));
    }

    #[test]
    fn synonym_replaces_hits_case_insensitively() {
        let lex = Lexicon::from_groups([vec!["strong", "robust", "solid"]]).unwrap();
        assert_eq!(lex.alternates("STRONG").unwrap().len(), 2);
        let v = generate_variants("A strong case", &VariantSpec::new(VariantKind::SynonymSubstitution, 1, 0), Some(&lex)).unwrap();
        assert_eq!(v[0].trace.changed, 1);
        assert!(v[0].text == "A robust case" || v[0].text == "A solid case");
    }

    #[test]
    fn synonym_needs_lexicon() {
        let e = generate_variants(DOC, &VariantSpec::new(VariantKind::SynonymSubstitution, 1, 0), None);
        assert!(matches!(e, Err(Error::Config(_))));
    }

    #[test]
    fn shuffle_is_seeded_and_preserves_tokens() {
        let spec = VariantSpec::new(VariantKind::OrderShuffle, 4, 99);
        let a = generate_variants("First one. Second one.", &spec, None).unwrap();
        let b = generate_variants("First one. Second one.", &spec, None).unwrap();
        assert_eq!(a, b);
        for v in generate_variants(DOC, &spec, None).unwrap() {
            assert_eq!(multiset(&v.text), multiset(DOC));
        }
    }

    #[test]
    fn noise_is_flagged_non_preserving() {
        let v = generate_variants(DOC, &VariantSpec::new(VariantKind::NoiseInjection { rate: 0.5 }, 2, 3), None).unwrap();
        assert!(v.iter().all(|x| !x.preserving));
        assert!(v.iter().all(|x| x.text != DOC));
    }

    #[test]
    fn empty_and_invalid_inputs() {
        let spec = VariantSpec::new(VariantKind::OrderShuffle, 1, 0);
        assert!(matches!(generate_variants("   ", &spec, None), Err(Error::EmptyInput(_))));
        let bad = VariantSpec::new(VariantKind::Redaction { fraction: 1.5 }, 1, 0);
        assert!(matches!(generate_variants(DOC, &bad, None), Err(Error::Config(_))));
        let zero = VariantSpec::new(VariantKind::OrderShuffle, 0, 0);
        assert!(matches!(generate_variants(DOC, &zero, None), Err(Error::Config(_))));
    }

    #[test]
    fn lexicon_rejects_singleton_groups() {
        assert!(Lexicon::from_groups([vec!["alone"]]).is_err());
    }
}
