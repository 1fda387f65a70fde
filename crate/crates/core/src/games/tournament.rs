use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::run_match;
use super::{GameSpec, MatchResult, Winner};
use crate::adapters::SystemHandle;
use crate::error::{Error, Result};
use crate::rng::{mix, stable_hash};
use crate::stats;

/// Pairwise outcome counts; `wins[i][j]` = matches `i` beat `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinMatrix {
    pub systems: Vec<String>,
    pub wins: Vec<Vec<u32>>,
    /// Symmetric.
    pub ties: Vec<Vec<u32>>,
    /// Aborted matches per pair; symmetric, excluded from wins and ties.
    pub invalid: Vec<Vec<u32>>,
}

impl WinMatrix {
    pub fn new(systems: Vec<String>) -> Result<Self> {
        let mut seen = systems.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != systems.len() {
            return Err(Error::Config("win matrix systems must be unique".into()));
        }
        let n = systems.len();
        Ok(Self {
            systems,
            wins: vec![vec![0; n]; n],
            ties: vec![vec![0; n]; n],
            invalid: vec![vec![0; n]; n],
        })
    }

    pub fn index(&self, id: &str) -> Result<usize> {
        self.systems
            .iter()
            .position(|s| s == id)
            .ok_or_else(|| Error::Config(format!("system `{id}` is not in the win matrix")))
    }

    fn pair(&self, a: &str, b: &str) -> Result<(usize, usize)> {
        let (i, j) = (self.index(a)?, self.index(b)?);
        if i == j {
            return Err(Error::InvalidComparison(format!("`{a}` cannot play itself")));
        }
        Ok((i, j))
    }

    pub fn record(&mut self, m: &MatchResult) -> Result<()> {
        let (i, j) = self.pair(&m.transcript.a, &m.transcript.b)?;
        match m.winner {
            Winner::A => self.wins[i][j] += 1,
            Winner::B => self.wins[j][i] += 1,
            Winner::Tie => {
                self.ties[i][j] += 1;
                self.ties[j][i] += 1;
            }
        }
        Ok(())
    }

    pub fn record_invalid(&mut self, a: &str, b: &str) -> Result<()> {
        let (i, j) = self.pair(a, b)?;
        self.invalid[i][j] += 1;
        self.invalid[j][i] += 1;
        Ok(())
    }

    /// Elementwise sum; associative and commutative.
    pub fn merge(&mut self, other: &WinMatrix) -> Result<()> {
        if other.systems != self.systems {
            return Err(Error::Config("cannot merge win matrices over different systems".into()));
        }
        for (dst, src) in [(&mut self.wins, &other.wins), (&mut self.ties, &other.ties), (&mut self.invalid, &other.invalid)] {
            for (r, s) in dst.iter_mut().zip(src) {
                for (x, y) in r.iter_mut().zip(s) {
                    *x += y;
                }
            }
        }
        Ok(())
    }

    /// Valid matches between `i` and `j`.
    pub fn valid(&self, i: usize, j: usize) -> u32 {
        self.wins[i][j] + self.wins[j][i] + self.ties[i][j]
    }

    /// Pairs that were scheduled but produced no valid match.
    pub fn missing_pairs(&self) -> Vec<(String, String)> {
        let n = self.systems.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.valid(i, j) == 0 && self.invalid[i][j] > 0 {
                    out.push((self.systems[i].clone(), self.systems[j].clone()));
                }
            }
        }
        out
    }

    pub fn total_invalid(&self) -> u32 {
        let n = self.systems.len();
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| self.invalid[i][j]).sum()
    }

    /// Writes `wins.csv` and `ties.csv` (row system vs column system) into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, m) in [("wins.csv", &self.wins), ("ties.csv", &self.ties)] {
            let path = dir.join(name);
            let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;
            let csv_err = |e: csv::Error| Error::Ingestion(format!("{}: {e}", path.display()));
            let mut header = vec!["system".to_string()];
            header.extend(self.systems.iter().cloned());
            w.write_record(&header).map_err(csv_err)?;
            for (s, row) in self.systems.iter().zip(m) {
                let mut rec = vec![s.clone()];
                rec.extend(row.iter().map(u32::to_string));
                w.write_record(&rec).map_err(csv_err)?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvalidMatch {
    pub a: String,
    pub b: String,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentResult {
    pub matrix: WinMatrix,
    /// Shannon entropy (bits) of each system's move labels over its valid matches.
    pub diversity: BTreeMap<String, f64>,
    pub matches: Vec<MatchResult>,
    pub invalid: Vec<InvalidMatch>,
}

pub fn strategy_diversity(matches: &[MatchResult]) -> BTreeMap<String, f64> {
    let mut labels: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for m in matches {
        for t in &m.transcript.turns {
            labels.entry(&t.actor).or_default().push(&t.move_label);
        }
    }
    labels
        .into_iter()
        .map(|(s, l)| (s.to_string(), stats::entropy_bits(l)))
        .collect()
}

/// Every unordered pair plays `matches_per_pair` matches, alternating which
/// system opens, cycling through `topics`.
pub fn tournament(
    spec: &GameSpec,
    systems: &[SystemHandle],
    topics: &[String],
    matches_per_pair: u32,
    seed: u64,
) -> Result<TournamentResult> {
    spec.validate()?;
    if systems.len() < 2 {
        return Err(Error::Config("a tournament needs at least 2 systems".into()));
    }
    if matches_per_pair == 0 {
        return Err(Error::Config("matches per pair must be at least 1".into()));
    }
    if topics.is_empty() {
        return Err(Error::Config("a tournament needs at least one topic".into()));
    }
    let mut matrix = WinMatrix::new(systems.iter().map(|s| s.id.clone()).collect())?;
    let mut schedule = Vec::new();
    for i in 0..systems.len() {
        for j in i + 1..systems.len() {
            for k in 0..matches_per_pair {
                let (a, b) = if k % 2 == 0 { (i, j) } else { (j, i) };
                let (lo, hi) = if systems[i].id < systems[j].id { (i, j) } else { (j, i) };
                let s = mix(&[seed, stable_hash(&systems[lo].id), stable_hash(&systems[hi].id), k as u64]);
                schedule.push((a, b, topics[k as usize % topics.len()].as_str(), s));
            }
        }
    }
    let outcomes: Vec<Result<MatchResult>> = schedule
        .par_iter()
        .map(|&(a, b, topic, s)| run_match(spec, &systems[a], &systems[b], topic, s))
        .collect();

    let mut matches = Vec::new();
    let mut invalid = Vec::new();
    for (&(a, b, _, s), outcome) in schedule.iter().zip(outcomes) {
        match outcome {
            Ok(m) => {
                matrix.record(&m)?;
                matches.push(m);
            }
            Err(e) => {
                matrix.record_invalid(&systems[a].id, &systems[b].id)?;
                invalid.push(InvalidMatch {
                    a: systems[a].id.clone(),
                    b: systems[b].id.clone(),
                    seed: s,
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok(TournamentResult {
        diversity: strategy_diversity(&matches),
        matrix,
        matches,
        invalid,
    })
}

/// Persists one match as `<dir>/<match_id>.json`.
pub fn write_match(dir: &Path, m: &MatchResult) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(format!("{}.json", m.match_id));
    let body = serde_json::to_string_pretty(m)?;
    fs::write(&path, body + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_match(path: &Path) -> Result<MatchResult> {
    let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&body).map_err(|e| Error::MalformedTranscript(format!("{}: {e}", path.display())))
}
