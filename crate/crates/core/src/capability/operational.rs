use serde::{Deserialize, Serialize};

use crate::adapters::Trial;
use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationalSummary {
    pub n: usize,
    pub mean_latency_ms: f64,
    pub median_latency_ms: f64,
    pub p95_latency_ms: f64,
    /// Sequential-equivalent trials per second; `None` when total latency is zero.
    pub throughput_per_s: Option<f64>,
}

pub fn latency_summary(latencies_ms: &[f64]) -> Result<OperationalSummary> {
    if latencies_ms.is_empty() {
        return Err(Error::InsufficientData("no latencies recorded".into()));
    }
    if latencies_ms.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::Ingestion("latencies must be finite and non-negative".into()));
    }
    let s = stats::sorted(latencies_ms);
    let total = stats::sum(s.iter().copied());
    Ok(OperationalSummary {
        n: s.len(),
        mean_latency_ms: stats::mean(&s).unwrap_or(0.0),
        median_latency_ms: stats::nearest_rank(&s, 0.5).unwrap_or(0.0),
        p95_latency_ms: stats::nearest_rank(&s, 0.95).unwrap_or(0.0),
        throughput_per_s: (total > 0.0).then(|| s.len() as f64 * 1000.0 / total),
    })
}

pub fn operational_metrics(trials: &[Trial]) -> Result<OperationalSummary> {
    let l: Vec<f64> = trials.iter().map(|t| t.latency_ms).collect();
    latency_summary(&l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let s = latency_summary(&[10.0, 20.0, 30.0]).unwrap();
        assert_eq!((s.mean_latency_ms, s.median_latency_ms), (20.0, 20.0));
        assert_eq!(latency_summary(&[50.0]).unwrap().p95_latency_ms, 50.0);
        let t = latency_summary(&[10.0; 100]).unwrap().throughput_per_s.unwrap();
        assert!((t - 100.0).abs() < 1e-9);
        assert_eq!(latency_summary(&[0.0, 0.0]).unwrap().throughput_per_s, None);
    }

    #[test]
    fn p95_is_nearest_rank() {
        let v: Vec<f64> = (1..=20).map(f64::from).collect();
        // ⌈0.95·20⌉ = 19
        assert_eq!(latency_summary(&v).unwrap().p95_latency_ms, 19.0);
    }
}
