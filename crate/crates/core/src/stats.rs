//! Small numeric helpers shared by the metric modules.

use std::cmp::Ordering;
use std::collections::BTreeMap;

/// Neumaier-compensated sum.
pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0_f64;
    let mut c = 0.0_f64;
    for v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(sum(values.iter().copied()) / values.len() as f64)
    }
}

/// Sample standard deviation (n - 1 denominator); zero for fewer than two
/// values and exactly zero for constant values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    // shifted by the first value so identical inputs give exact zeros
    let shifted: Vec<f64> = values.iter().map(|v| v - values[0]).collect();
    let m = mean(&shifted).unwrap_or(0.0);
    let ss = sum(shifted.iter().map(|v| (v - m) * (v - m)));
    (ss / (values.len() - 1) as f64).sqrt()
}

pub fn total_cmp(a: &f64, b: &f64) -> Ordering {
    a.total_cmp(b)
}

pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(total_cmp);
    v
}

/// Nearest-rank percentile on an already sorted slice: the ⌈p·n⌉-th value (1-based),
/// with p = 0 mapping to the minimum.
pub fn nearest_rank(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let n = sorted.len();
    let rank = (p * n as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, n) - 1])
}

/// Average ranks (1-based), ties share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let mx = mean(x)?;
    let my = mean(y)?;
    let sxy = sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let sxx = sum(x.iter().map(|a| (a - mx) * (a - mx)));
    let syy = sum(y.iter().map(|b| (b - my) * (b - my)));
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Shannon entropy in bits of a label histogram.
pub fn entropy_bits<'a>(labels: impl IntoIterator<Item = &'a str>) -> f64 {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut n = 0usize;
    for l in labels {
        *counts.entry(l).or_default() += 1;
        n += 1;
    }
    if n == 0 {
        return 0.0;
    }
    let h = -sum(counts.values().map(|&c| {
        let p = c as f64 / n as f64;
        p * p.log2()
    }));
    // -0.0 for a single label
    h.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_values_have_exact_zero_std() {
        assert_eq!(sample_std(&[3.3; 10]), 0.0);
        assert_eq!(sample_std(&[0.1, 0.1, 0.1]), 0.0);
    }

    #[test]
    fn std_matches_textbook_value() {
        // 2, 4, 4, 4, 5, 5, 7, 9: sum of squares 32 over 7
        let s = sample_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16];
        assert_eq!(sum(v), 1.0);
    }

    #[test]
    fn nearest_rank_examples() {
        let s = [10.0, 20.0, 30.0];
        assert_eq!(nearest_rank(&s, 0.5), Some(20.0));
        assert_eq!(nearest_rank(&s, 0.95), Some(30.0));
        assert_eq!(nearest_rank(&s, 0.0), Some(10.0));
        assert_eq!(nearest_rank(&[50.0], 0.95), Some(50.0));
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn entropy_of_uniform_pair() {
        assert_eq!(entropy_bits(["a", "b"]), 1.0);
        assert_eq!(entropy_bits(["a", "a", "a"]), 0.0);
    }
}
