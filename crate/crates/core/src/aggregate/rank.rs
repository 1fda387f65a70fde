use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::WinMatrix;

pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_TOL: f64 = 1e-12;
/// Pseudo-tie mass added against every opponent of a system without wins.
pub const ZERO_WIN_EPSILON: f64 = 0.5;

/// Bradley–Terry strengths; positive and summing to 1.
pub type StrengthVector = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BtFit {
    pub strengths: StrengthVector,
    pub iterations: usize,
    pub converged: bool,
    /// Systems that received pseudo-ties because they had no wins.
    pub regularized: Vec<String>,
}

impl BtFit {
    pub fn probability(&self, a: &str, b: &str) -> Option<f64> {
        let (pa, pb) = (self.strengths.get(a)?, self.strengths.get(b)?);
        Some(pa / (pa + pb))
    }
}

/// Connected components of the comparison graph, as sorted id lists.
pub fn components(wm: &WinMatrix) -> Vec<Vec<String>> {
    let n = wm.systems.len();
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut stack = vec![start];
        comp[start] = id;
        let mut members = Vec::new();
        while let Some(i) = stack.pop() {
            members.push(wm.systems[i].clone());
            for j in 0..n {
                if j != i && comp[j] == usize::MAX && wm.valid(i, j) > 0 {
                    comp[j] = id;
                    stack.push(j);
                }
            }
        }
        members.sort();
        out.push(members);
    }
    out
}

/// Maximum-likelihood strengths by minorization–maximization; ties count as
/// half a win to each side.
pub fn bradley_terry(wm: &WinMatrix, max_iter: usize, tol: f64) -> Result<BtFit> {
    let n = wm.systems.len();
    if n < 2 {
        return Err(Error::InsufficientData("Bradley–Terry needs at least 2 systems".into()));
    }
    let comps = components(wm);
    if comps.len() > 1 {
        return Err(Error::Inestimable { components: comps });
    }
    let mut games = vec![vec![0.0; n]; n];
    let mut won = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                games[i][j] = wm.valid(i, j) as f64;
                won[i] += wm.wins[i][j] as f64 + 0.5 * wm.ties[i][j] as f64;
            }
        }
    }
    let zero: Vec<usize> = (0..n).filter(|&i| won[i] == 0.0).collect();
    for &i in &zero {
        for j in (0..n).filter(|&j| j != i) {
            games[i][j] += ZERO_WIN_EPSILON;
            games[j][i] += ZERO_WIN_EPSILON;
            won[i] += ZERO_WIN_EPSILON / 2.0;
            won[j] += ZERO_WIN_EPSILON / 2.0;
        }
    }

    let mut pi = vec![1.0 / n as f64; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut next: Vec<f64> = (0..n)
            .map(|i| {
                let denom: f64 = (0..n)
                    .filter(|&j| j != i && games[i][j] > 0.0)
                    .map(|j| games[i][j] / (pi[i] + pi[j]))
                    .sum();
                won[i] / denom
            })
            .collect();
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|p| *p /= total);
        let change = pi
            .iter()
            .zip(&next)
            .map(|(a, b)| ((b - a) / a).abs())
            .fold(0.0, f64::max);
        pi = next;
        if change < tol {
            converged = true;
            break;
        }
    }
    Ok(BtFit {
        strengths: wm.systems.iter().cloned().zip(pi).collect(),
        iterations,
        converged,
        regularized: zero.into_iter().map(|i| wm.systems[i].clone()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopelandResult {
    pub scores: BTreeMap<String, f64>,
    /// Pairs without a valid match; each side was credited 0.5.
    pub missing: Vec<(String, String)>,
}

/// One point per pairwise majority, half a point per split or missing pair.
pub fn copeland(wm: &WinMatrix) -> CopelandResult {
    let n = wm.systems.len();
    let mut scores: BTreeMap<String, f64> = wm.systems.iter().map(|s| (s.clone(), 0.0)).collect();
    let mut missing = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&wm.systems[i], &wm.systems[j]);
            if wm.valid(i, j) == 0 {
                missing.push((a.clone(), b.clone()));
            }
            let (pa, pb) = match wm.wins[i][j].cmp(&wm.wins[j][i]) {
                std::cmp::Ordering::Greater => (1.0, 0.0),
                std::cmp::Ordering::Less => (0.0, 1.0),
                std::cmp::Ordering::Equal => (0.5, 0.5),
            };
            *scores.get_mut(a).unwrap() += pa;
            *scores.get_mut(b).unwrap() += pb;
        }
    }
    CopelandResult { scores, missing }
}
