use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSummary {
    pub mean_diff: f64,
    pub median_diff: f64,
    /// Two-sample Kolmogorov–Smirnov statistic.
    pub ks: f64,
}

/// Largest absolute gap between the two empirical CDFs.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let a = stats::sorted(a);
    let b = stats::sorted(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

pub fn distribution_shift(a: &[f64], b: &[f64]) -> Result<ShiftSummary> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("distribution shift needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidComparison("samples must be finite".into()));
    }
    let median = |v: &[f64]| stats::nearest_rank(&stats::sorted(v), 0.5).unwrap_or(0.0);
    Ok(ShiftSummary {
        mean_diff: stats::mean(a).unwrap_or(0.0) - stats::mean(b).unwrap_or(0.0),
        median_diff: median(a) - median(b),
        ks: ks_statistic(a, b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Evaluates both ECDFs at every observed value.
    fn ks_oracle(a: &[f64], b: &[f64]) -> f64 {
        let ecdf = |s: &[f64], x: f64| s.iter().filter(|v| **v <= x).count() as f64 / s.len() as f64;
        a.iter()
            .chain(b)
            .map(|&x| (ecdf(a, x) - ecdf(b, x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn examples() {
        let s = distribution_shift(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.mean_diff, s.ks), (0.0, 0.0));
        let s = distribution_shift(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        assert!((ks_oracle(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]) - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.ks - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.mean_diff, -1.0);
        assert_eq!(distribution_shift(&[0.0, 0.0], &[1.0, 1.0]).unwrap().ks, 1.0);
        assert!(distribution_shift(&[], &[1.0]).is_err());
    }

    #[test]
    fn matches_oracle_with_ties() {
        let a = [1.0, 1.0, 2.0, 5.0, 5.0];
        let b = [1.0, 2.0, 2.0, 3.0];
        assert!((ks_statistic(&a, &b) - ks_oracle(&a, &b)).abs() < 1e-15);
    }
}
