//! Empirical quantile mapping from a source score distribution onto a target.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// Piecewise-linear monotone map anchored at the source order statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMap {
    /// (source value, target value), strictly increasing in source value,
    /// non-decreasing in target value.
    pub knots: Vec<(f64, f64)>,
    /// Grid probabilities the knots were built at.
    pub probabilities: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Sample quantile (linear interpolation between order statistics) at the
/// rational probability `num / den`, computed with integer index arithmetic.
pub fn quantile_at_ratio(sorted: &[f64], num: usize, den: usize) -> f64 {
    let m = sorted.len();
    if m == 1 || den == 0 {
        return sorted[0];
    }
    let scaled = num * (m - 1);
    let lo = scaled / den;
    let rem = scaled % den;
    if rem == 0 || lo + 1 >= m {
        return sorted[lo.min(m - 1)];
    }
    let frac = rem as f64 / den as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

impl CalibrationMap {
    pub fn apply(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x <= k[0].0 {
            return k[0].1;
        }
        let last = k[k.len() - 1];
        if x >= last.0 {
            return last.1;
        }
        // first knot strictly above x
        let hi = k.partition_point(|p| p.0 <= x);
        let (x0, y0) = k[hi - 1];
        let (x1, y1) = k[hi];
        if x == x0 {
            return y0;
        }
        y0 + (x - x0) / (x1 - x0) * (y1 - y0)
    }

    pub fn apply_all(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|x| self.apply(*x)).collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.knots.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1)
    }
}

/// Builds the map on the source's order statistics: the i-th smallest source
/// value (probability `i/(n−1)`) maps to the target quantile at that probability.
/// Tied source values collapse to one knot at the mean of their target quantiles.
pub fn quantile_map(source: &[f64], target: &[f64]) -> Result<CalibrationMap> {
    if source.len() < 2 || target.len() < 2 {
        return Err(Error::InsufficientData("quantile mapping needs at least two values per sample".into()));
    }
    if source.iter().chain(target).any(|v| !v.is_finite()) {
        return Err(Error::InvalidComparison("quantile mapping needs finite values".into()));
    }
    let src = stats::sorted(source);
    let tgt = stats::sorted(target);
    let n = src.len();
    let mut warnings = Vec::new();

    let mut knots: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut probabilities = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && src[j + 1] == src[i] {
            j += 1;
        }
        let ys: Vec<f64> = (i..=j).map(|r| quantile_at_ratio(&tgt, r, n - 1)).collect();
        let y = if ys.len() == 1 { ys[0] } else { stats::mean(&ys).unwrap_or(ys[0]) };
        knots.push((src[i], y));
        probabilities.push(i as f64 / (n - 1) as f64);
        i = j + 1;
    }
    if knots.len() < n {
        warnings.push(format!("{} tied source values collapsed into shared knots", n - knots.len()));
    }
    if tgt[0] == tgt[tgt.len() - 1] && src[0] != src[n - 1] {
        warnings.push("target sample is constant: the map is constant".into());
    }
    Ok(CalibrationMap {
        knots,
        probabilities,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_calibration_is_identity_on_grid() {
        let s = [3.0, 1.0, 2.0, 7.5];
        let m = quantile_map(&s, &s).unwrap();
        for x in s {
            assert_eq!(m.apply(x), x);
        }
    }

    #[test]
    fn median_maps_to_median() {
        let m = quantile_map(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap();
        assert_eq!(m.apply(2.0), 20.0);
        assert_eq!(m.apply(1.5), 15.0);
        assert_eq!(m.apply(-4.0), 10.0);
        assert_eq!(m.apply(99.0), 30.0);
    }

    #[test]
    fn quantile_ratio_matches_interpolation() {
        let t = [0.0, 10.0, 20.0, 30.0];
        assert_eq!(quantile_at_ratio(&t, 1, 2), 15.0);
        assert_eq!(quantile_at_ratio(&t, 1, 3), 10.0);
        assert_eq!(quantile_at_ratio(&t, 2, 2), 30.0);
    }

    #[test]
    fn constant_target_warns() {
        let m = quantile_map(&[1.0, 2.0, 3.0], &[5.0, 5.0]).unwrap();
        assert!(!m.warnings.is_empty());
        assert_eq!(m.apply(2.5), 5.0);
        assert!(quantile_map(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ties_collapse_and_stay_monotone() {
        let m = quantile_map(&[1.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.knots.len(), 3);
        assert!(m.is_monotone());
    }
}
