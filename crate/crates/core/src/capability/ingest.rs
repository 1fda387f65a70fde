//! Delimited-text readers for review pairs, decisions and benchmark scores.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::fairness::Decision;
use super::review::{ReviewPair, ReviewSource, SCALE_MAX, SCALE_MIN};
use crate::error::{Error, Result};

/// An externally produced benchmark score; never computed here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub benchmark: String,
    pub system_id: String,
    pub score: f64,
    #[serde(default)]
    pub provenance: String,
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;
    let rows = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;
    if rows.is_empty() {
        return Err(Error::EmptyInput(format!("{} has no rows", path.display())));
    }
    Ok(rows)
}

#[derive(Deserialize)]
struct ReviewRow {
    input_id: String,
    score_a: f64,
    score_b: f64,
    source: String,
}

/// Header: `input_id, score_a, score_b, source`.
pub fn read_review_pairs(path: &Path) -> Result<Vec<ReviewPair>> {
    read_rows::<ReviewRow>(path)?
        .into_iter()
        .map(|r| {
            for s in [r.score_a, r.score_b] {
                if !(SCALE_MIN..=SCALE_MAX).contains(&s) {
                    return Err(Error::Ingestion(format!(
                        "{}: score {s} for `{}` is outside [{SCALE_MIN}, {SCALE_MAX}]",
                        path.display(),
                        r.input_id
                    )));
                }
            }
            let source: ReviewSource = r.source.parse()?;
            Ok(ReviewPair::new(r.input_id, r.score_a, r.score_b, source))
        })
        .collect()
}

/// Header: `input_id, group, outcome`.
pub fn read_decisions(path: &Path) -> Result<Vec<Decision>> {
    read_rows(path)
}

/// Header: `benchmark, system_id, score, provenance`.
pub fn read_benchmarks(path: &Path) -> Result<Vec<BenchmarkRecord>> {
    let rows: Vec<BenchmarkRecord> = read_rows(path)?;
    if let Some(r) = rows.iter().find(|r| !r.score.is_finite()) {
        return Err(Error::Ingestion(format!("non-finite score for `{}`", r.benchmark)));
    }
    Ok(rows)
}
