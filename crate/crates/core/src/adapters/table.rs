use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::capability::{weighted_score, WeightedRubric};
use crate::error::{Error, Result};
use crate::similarity::Output;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub output: Output,
    pub confidence: Option<f64>,
    /// Synthetic latency reported by mocks instead of wall-clock time.
    #[serde(default)]
    pub latency_ms: f64,
}

impl ScriptEntry {
    pub fn new(output: Output) -> Self {
        Self {
            output,
            confidence: None,
            latency_ms: 0.0,
        }
    }

    pub fn with_confidence(mut self, c: f64) -> Self {
        self.confidence = Some(c);
        self
    }

    pub fn with_latency(mut self, ms: f64) -> Self {
        self.latency_ms = ms;
        self
    }
}

/// Deterministic input-id → output table backing scripted, noisy and replay systems.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScriptTable {
    entries: BTreeMap<String, ScriptEntry>,
    /// Numeric outputs shift by `slope × control value` for each listed control.
    #[serde(default)]
    pub control_slopes: BTreeMap<String, f64>,
}

impl ScriptTable {
    pub fn new(entries: impl IntoIterator<Item = (String, ScriptEntry)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (id, e) in entries {
            if let Some(c) = e.confidence {
                if !(0.0..=1.0).contains(&c) {
                    return Err(Error::Ingestion(format!(
                        "confidence {c} for `{id}` is outside [0, 1]"
                    )));
                }
            }
            if !(e.latency_ms >= 0.0) {
                return Err(Error::Ingestion(format!("negative latency for `{id}`")));
            }
            if map.insert(id.clone(), e).is_some() {
                return Err(Error::Ingestion(format!("duplicate input id `{id}`")));
            }
        }
        if map.is_empty() {
            return Err(Error::Ingestion("script table is empty".into()));
        }
        Ok(Self {
            entries: map,
            control_slopes: BTreeMap::new(),
        })
    }

    /// Convenience constructor from `(input-id, output)` pairs.
    pub fn from_outputs<K: Into<String>>(pairs: impl IntoIterator<Item = (K, Output)>) -> Result<Self> {
        Self::new(pairs.into_iter().map(|(k, o)| (k.into(), ScriptEntry::new(o))))
    }

    pub fn get(&self, input_id: &str) -> Option<&ScriptEntry> {
        self.entries.get(input_id)
    }

    pub fn entries(&self) -> &BTreeMap<String, ScriptEntry> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Reads a delimited table with a header row.
    ///
    /// Recognised columns are `input_id`, `output`, `confidence`, `latency_ms`.
    /// Any other column is a numeric rubric criterion; when `output` is blank
    /// and a rubric is supplied the output becomes the rubric's weighted score.
    pub fn from_csv(path: &Path, rubric: Option<&WeightedRubric>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;
        let headers = rdr
            .headers()
            .map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?
            .clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let id_col = col("input_id").ok_or_else(|| {
            Error::Ingestion(format!("{}: missing `input_id` column", path.display()))
        })?;
        let out_col = col("output");
        let conf_col = col("confidence");
        let lat_col = col("latency_ms");
        let criteria_cols: Vec<(usize, String)> = headers
            .iter()
            .enumerate()
            .filter(|(_, h)| !["input_id", "output", "confidence", "latency_ms"].contains(h))
            .map(|(i, h)| (i, h.to_string()))
            .collect();

        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;
            let at = |c: Option<usize>| c.and_then(|c| rec.get(c)).filter(|s| !s.is_empty());
            let id = rec.get(id_col).unwrap_or_default().to_string();
            if id.is_empty() {
                return Err(Error::Ingestion(format!(
                    "{}: row {} has an empty input_id",
                    path.display(),
                    line + 2
                )));
            }
            let parse_num = |s: &str, what: &str| {
                s.parse::<f64>().map_err(|_| {
                    Error::Ingestion(format!("{}: bad {what} `{s}` for `{id}`", path.display()))
                })
            };
            let output = match at(out_col) {
                Some(cell) => Output::parse(cell),
                None => {
                    let rubric = rubric.ok_or_else(|| {
                        Error::Ingestion(format!(
                            "{}: `{id}` has no output and no rubric is configured",
                            path.display()
                        ))
                    })?;
                    let mut scores = BTreeMap::new();
                    for (c, name) in &criteria_cols {
                        if let Some(cell) = rec.get(*c).filter(|s| !s.is_empty()) {
                            scores.insert(name.clone(), parse_num(cell, name)?);
                        }
                    }
                    Output::Number(weighted_score(&scores, rubric)?)
                }
            };
            let mut entry = ScriptEntry::new(output);
            if let Some(c) = at(conf_col) {
                entry.confidence = Some(parse_num(c, "confidence")?);
            }
            if let Some(l) = at(lat_col) {
                entry.latency_ms = parse_num(l, "latency_ms")?;
            }
            rows.push((id, entry));
        }
        Self::new(rows)
    }
}
