use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_for;
use crate::stats;

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const DEFAULT_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    Mean,
    Median,
    /// Fraction of non-zero samples.
    Rate,
}

impl Statistic {
    pub fn apply(&self, xs: &[f64]) -> f64 {
        match self {
            Statistic::Mean => stats::mean(xs).unwrap_or(0.0),
            Statistic::Median => stats::nearest_rank(&stats::sorted(xs), 0.5).unwrap_or(0.0),
            Statistic::Rate => xs.iter().filter(|x| **x != 0.0).count() as f64 / xs.len().max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// Percentile bootstrap interval; resample `b` draws from its own generator
/// keyed by `(seed, b)`, so the result does not depend on thread scheduling.
pub fn bootstrap_ci(samples: &[f64], statistic: Statistic, n_resamples: usize, level: f64, seed: u64) -> Result<Interval> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!("bootstrap needs ≥ 2 samples, got {}", samples.len())));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("confidence level must be in (0, 1), got {level}")));
    }
    if n_resamples == 0 {
        return Err(Error::Config("bootstrap needs at least one resample".into()));
    }
    let n = samples.len();
    let dist: Vec<f64> = (0..n_resamples as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_for(&[seed, b]);
            let draw: Vec<f64> = (0..n).map(|_| samples[rng.gen_range(0..n)]).collect();
            statistic.apply(&draw)
        })
        .collect();
    let dist = stats::sorted(&dist);
    let tail = (1.0 - level) / 2.0;
    Ok(Interval {
        lo: stats::nearest_rank(&dist, tail).unwrap_or(dist[0]),
        hi: stats::nearest_rank(&dist, 1.0 - tail).unwrap_or(dist[dist.len() - 1]),
    })
}
