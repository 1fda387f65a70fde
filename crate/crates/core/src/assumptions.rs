//! The assumption ledger: which validity assumptions a run depends on, whether
//! they held, and which metrics they gate.

use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Held {
    Yes,
    No,
    Unchecked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionEntry {
    pub id: String,
    pub statement: String,
    pub held: Held,
    pub affected_metrics: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AssumptionLedger {
    entries: Vec<AssumptionEntry>,
}

impl AssumptionLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[AssumptionEntry] {
        &self.entries
    }

    pub fn get(&self, id: &str) -> Option<&AssumptionEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn push(&mut self, entry: AssumptionEntry) -> Result<()> {
        if self.get(&entry.id).is_some() {
            return Err(Error::Config(format!(
                "duplicate assumption id `{}`",
                entry.id
            )));
        }
        self.entries.push(entry);
        Ok(())
    }

    /// Inserts or replaces an entry by id.
    pub fn record(
        &mut self,
        id: impl Into<String>,
        statement: impl Into<String>,
        held: Held,
        affected: impl IntoIterator<Item = impl Into<String>>,
    ) {
        let entry = AssumptionEntry {
            id: id.into(),
            statement: statement.into(),
            held,
            affected_metrics: affected.into_iter().map(Into::into).collect(),
        };
        match self.entries.iter_mut().find(|e| e.id == entry.id) {
            Some(existing) => *existing = entry,
            None => self.entries.push(entry),
        }
    }

    /// Adds a metric to an existing entry's affected list.
    pub fn cite(&mut self, id: &str, metric: &str) {
        if let Some(e) = self.entries.iter_mut().find(|e| e.id == id) {
            if !e.affected_metrics.iter().any(|m| m == metric) {
                e.affected_metrics.push(metric.to_string());
            }
        }
    }

    /// Ids of every entry that lists `metric`.
    pub fn citations(&self, metric: &str) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| e.affected_metrics.iter().any(|m| m == metric))
            .map(|e| e.id.clone())
            .collect()
    }

    /// The first failed assumption that gates `metric`, if any.
    pub fn failed_for(&self, metric: &str) -> Option<&AssumptionEntry> {
        self.entries
            .iter()
            .find(|e| e.held == Held::No && e.affected_metrics.iter().any(|m| m == metric))
    }

    pub fn gate(&self, metric: &str) -> Result<()> {
        match self.failed_for(metric) {
            Some(e) => Err(Error::MethodInadmissible {
                metric: metric.to_string(),
                assumption: e.id.clone(),
            }),
            None => Ok(()),
        }
    }

    /// Drops affected-metric references to metrics that are not part of the run.
    pub fn restrict_to(&mut self, run_metrics: &[String]) {
        for e in &mut self.entries {
            e.affected_metrics.retain(|m| run_metrics.contains(m));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Independent,
    SharedTrainingData,
    DistilledFrom,
}

/// A declared provenance relation between two systems.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProvenanceRelation {
    pub a: String,
    pub b: String,
    pub relation: Relation,
}

pub const NO_GROUND_TRUTH: &str = "no-ground-truth";
pub const EXPERT_EVALUATION_UNAVAILABLE: &str = "expert-evaluation-unavailable";
pub const OBSERVABLE_OUTPUTS_ONLY: &str = "observable-outputs-only";
pub const PROVENANCE_CONTROLLED: &str = "provenance-controlled";
pub const METHOD_SUBSET: &str = "method-subset";

fn all_metric_ids() -> Vec<String> {
    catalog::METRICS.iter().map(|m| m.id.to_string()).collect()
}

/// Builds the baseline ledger from the declared provenance relations.
///
/// Agreement-based metrics are marked as failing when any relation other than
/// `independent` is declared, as holding when every pair of `systems` is
/// declared independent, and unchecked otherwise.
pub fn validate_assumptions(systems: &[String], relations: &[ProvenanceRelation]) -> AssumptionLedger {
    let all = all_metric_ids();
    let agreement: Vec<String> = catalog::agreement_metrics().map(String::from).collect();

    let offending: Vec<&ProvenanceRelation> = relations
        .iter()
        .filter(|r| r.relation != Relation::Independent)
        .collect();
    let declared_independent = |a: &str, b: &str| {
        relations.iter().any(|r| {
            r.relation == Relation::Independent
                && ((r.a == a && r.b == b) || (r.a == b && r.b == a))
        })
    };
    let every_pair_independent = systems.len() >= 2
        && systems.iter().enumerate().all(|(i, a)| {
            systems[i + 1..].iter().all(|b| declared_independent(a, b))
        });

    let (provenance_held, provenance_statement) = if !offending.is_empty() {
        let pairs: Vec<String> = offending
            .iter()
            .map(|r| format!("{} {:?} {}", r.a, r.relation, r.b))
            .collect();
        (
            Held::No,
            format!(
                "Provenance is controlled: agreement-based methods are excluded because of {}",
                pairs.join(", ")
            ),
        )
    } else if every_pair_independent {
        (
            Held::Yes,
            "Provenance is controlled: every system pair is declared independent".to_string(),
        )
    } else {
        (
            Held::Unchecked,
            "Provenance is controlled: independence was not declared for every system pair"
                .to_string(),
        )
    };

    let mut ledger = AssumptionLedger::new();
    ledger.record(
        NO_GROUND_TRUTH,
        "No ground truth or oracle of risk or performance is available",
        Held::Unchecked,
        all.clone(),
    );
    ledger.record(
        EXPERT_EVALUATION_UNAVAILABLE,
        "Expert evaluation on proxy metrics is expensive, unavailable or unreliable",
        Held::Unchecked,
        all.clone(),
    );
    ledger.record(
        OBSERVABLE_OUTPUTS_ONLY,
        "Comparisons rely only on observable outputs and automatically computable metrics",
        Held::Yes,
        all.clone(),
    );
    ledger.record(PROVENANCE_CONTROLLED, provenance_statement, provenance_held, agreement);
    ledger.record(
        METHOD_SUBSET,
        "Only the selected subset of dimensions and metrics is applied",
        Held::Yes,
        all,
    );
    ledger
}
