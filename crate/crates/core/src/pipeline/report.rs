//! The report bundle and its two renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::hotlist::Hotlist;
use super::judge::JudgeReport;
use crate::aggregate::{BtFit, CopelandResult, DominanceResult, Interval, SensitivityResult};
use crate::assumptions::{AssumptionEntry, Held};
use crate::capability::CalibrationMap;
use crate::catalog::{Dimension, Orientation};
use crate::error::{Error, Result};
use crate::games::{InvalidMatch, WinMatrix};
use crate::risk::{RiskDelta, RiskProfile};

/// Only this field may differ between runs with equal configuration and seeds.
pub const TIMESTAMP_FIELD: &str = "generated_at";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Machine,
    Human,
}

/// A report section that may be absent by design or by failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Section<T> {
    #[serde(rename = "not selected")]
    NotSelected,
    Skipped { reason: String },
    Reported(T),
}

impl<T> Section<T> {
    pub fn reported(&self) -> Option<&T> {
        match self {
            Section::Reported(t) => Some(t),
            _ => None,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            Section::NotSelected => "not selected",
            Section::Skipped { .. } => "skipped",
            Section::Reported(_) => "reported",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricStatus {
    Reported,
    Skipped,
    /// Skipped because a ledger assumption it depends on failed.
    Excluded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub metric_id: String,
    pub dimension: Dimension,
    pub risk_dimension: String,
    pub orientation: Orientation,
    pub bounds: Option<(f64, f64)>,
    pub status: MetricStatus,
    pub reason: Option<String>,
    /// Ledger entry ids this metric depends on.
    pub citations: Vec<String>,
    /// Raw values per system.
    pub values: BTreeMap<String, f64>,
    /// Directional scores in [0, 1], higher better.
    pub directional: BTreeMap<String, f64>,
    pub ci: BTreeMap<String, Interval>,
    pub details: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipNote {
    pub metric_id: String,
    pub reason: String,
    pub assumption: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLedger {
    pub assumptions: Vec<AssumptionEntry>,
    pub skips: Vec<SkipNote>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditCounts {
    pub selected: usize,
    pub reported: usize,
    pub skipped: usize,
    /// Included in `skipped`.
    pub excluded: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub selected: Vec<String>,
    pub totals: AuditCounts,
    pub per_dimension: BTreeMap<String, AuditCounts>,
    /// selected = reported + skipped, overall and per dimension, and every
    /// skip has a reason.
    pub reconciled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSummary {
    pub id: String,
    pub kind: String,
    pub deterministic: bool,
    pub provenance_tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub run: u64,
    pub repeat_seeds: Vec<u64>,
    pub game_seeds: Vec<u64>,
    pub bootstrap_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub total: usize,
    pub failed: usize,
    pub per_system: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemCalibration {
    pub system_id: String,
    /// Offsets against the baseline before mapping.
    pub mean_diff: f64,
    pub median_diff: f64,
    pub ks_before: f64,
    pub ks_after: f64,
    pub map: CalibrationMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSection {
    pub target: String,
    pub applied_to: Vec<String>,
    pub systems: Vec<SystemCalibration>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSummary {
    pub game: String,
    pub rounds: u32,
    pub judge: String,
    pub seed: u64,
    pub matches: usize,
    pub win_matrix: WinMatrix,
    pub diversity: BTreeMap<String, f64>,
    pub invalid: Vec<InvalidMatch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamesSection {
    pub topics: Vec<String>,
    pub games: Vec<GameSummary>,
    pub combined: WinMatrix,
    pub bradley_terry: Section<BtFit>,
    pub copeland: CopelandResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationSection {
    pub weights: BTreeMap<String, f64>,
    /// system → metric → directional score.
    pub profiles: BTreeMap<String, BTreeMap<String, f64>>,
    pub composites: BTreeMap<String, f64>,
    /// dimension → system → composite over that dimension's metrics.
    pub composites_by_dimension: BTreeMap<String, BTreeMap<String, f64>>,
    pub dominance: DominanceResult,
    pub sensitivity: SensitivityResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskSection {
    pub profiles: BTreeMap<String, RiskProfile>,
    /// system → marginal risk against the baseline; positive = added risk.
    pub deltas: BTreeMap<String, RiskDelta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub tool: String,
    pub tool_version: String,
    pub generated_at: String,
    pub run_name: String,
    pub config_digest: String,
    pub baseline: String,
    pub systems: Vec<SystemSummary>,
    pub dimensions: BTreeMap<String, String>,
    pub seeds: Seeds,
    pub ledger: RunLedger,
    pub judges: Vec<JudgeReport>,
    pub trials: TrialStats,
    pub metrics: Vec<MetricResult>,
    pub audit: Audit,
    pub hotlist: Section<Hotlist>,
    pub calibration: Section<CalibrationSection>,
    pub games: Section<GamesSection>,
    pub aggregation: Section<AggregationSection>,
    pub risk: Section<RiskSection>,
}

impl ReportBundle {
    pub fn metric(&self, id: &str) -> Option<&MetricResult> {
        self.metrics.iter().find(|m| m.metric_id == id)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Ingestion(format!("report: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Machine => self.to_json(),
            Format::Human => Ok(render_markdown(self)),
        }
    }
}

/// Writes `report.json` or `report.md` into `dir`.
pub fn emit_report(bundle: &ReportBundle, format: Format, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(match format {
        Format::Machine => "report.json",
        Format::Human => "report.md",
    });
    fs::write(&path, bundle.render(format)?).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn held(h: Held) -> &'static str {
    match h {
        Held::Yes => "yes",
        Held::No => "no",
        Held::Unchecked => "unchecked",
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v}"))
}

fn render_markdown(b: &ReportBundle) -> String {
    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(w, "# Marginal-risk report: {}\n", b.run_name);
    let _ = writeln!(w, "- baseline: `{}`", b.baseline);
    let _ = writeln!(w, "- tool: {} {}", b.tool, b.tool_version);
    let _ = writeln!(w, "- config digest: `{}`", b.config_digest);
    let _ = writeln!(w, "- run seed: {}", b.seeds.run);
    let dims: Vec<String> = b.dimensions.iter().map(|(d, st)| format!("{d} ({st})")).collect();
    let _ = writeln!(w, "- dimensions: {}", dims.join(", "));
    let _ = writeln!(w, "- trials: {} ({} failed)\n", b.trials.total, b.trials.failed);

    let _ = writeln!(w, "## Systems\n");
    let _ = writeln!(w, "| system | kind | deterministic | provenance |");
    let _ = writeln!(w, "|---|---|---|---|");
    for sys in &b.systems {
        let _ = writeln!(w, "| {} | {} | {} | {} |", sys.id, sys.kind, sys.deterministic, sys.provenance_tags.join(" "));
    }

    let _ = writeln!(w, "\n## Marginal risk against `{}`\n", b.baseline);
    match &b.risk {
        Section::Reported(r) => {
            let mut top: Vec<(&str, &str, f64)> = r
                .deltas
                .iter()
                .flat_map(|(sys, d)| d.dimensions().iter().map(move |(dim, v)| (sys.as_str(), dim.as_str(), *v)))
                .collect();
            top.sort_by(|a, b| b.2.abs().total_cmp(&a.2.abs()).then_with(|| (a.0, a.1).cmp(&(b.0, b.1))));
            let _ = writeln!(w, "Positive values mean added risk.\n");
            let _ = writeln!(w, "| system | risk dimension | delta |");
            let _ = writeln!(w, "|---|---|---|");
            for (sys, dim, v) in top {
                let _ = writeln!(w, "| {sys} | {dim} | {v} |");
            }
        }
        other => {
            let _ = writeln!(w, "{}", section_note(other));
        }
    }

    let _ = writeln!(w, "\n## Dominance\n");
    match &b.aggregation {
        Section::Reported(a) => {
            for p in &a.dominance.pairs {
                let _ = writeln!(w, "- `{}` vs `{}`: {:?}", p.a, p.b, p.verdict);
            }
            let _ = writeln!(w, "- non-dominated: {}", a.dominance.non_dominated.join(", "));
            if !a.dominance.unresolved.is_empty() {
                let _ = writeln!(w, "- conflicting metrics: {}", a.dominance.unresolved.join(", "));
            }
            let _ = writeln!(w, "\nComposite scores (weighted directional mean):\n");
            for (sys, v) in &a.composites {
                let _ = writeln!(w, "- `{sys}`: {v}");
            }
            let _ = writeln!(
                w,
                "\nSensitivity: {} weightings tried; winner {}.",
                a.sensitivity.outcomes.len(),
                if a.sensitivity.stable { "stable" } else { "changes with the weights" }
            );
        }
        other => {
            let _ = writeln!(w, "{}", section_note(other));
        }
    }

    let _ = writeln!(w, "\n## Metrics\n");
    let ids: Vec<&str> = b.systems.iter().map(|s| s.id.as_str()).collect();
    let _ = writeln!(w, "| metric | status | {} |", ids.join(" | "));
    let _ = writeln!(w, "|---|---|{}", "---|".repeat(ids.len()));
    for m in b.metrics.iter().filter(|m| m.status == MetricStatus::Reported) {
        let cells: Vec<String> = ids
            .iter()
            .map(|id| {
                let mut c = format!("{} (dir {})", cell(m.values.get(*id).copied()), cell(m.directional.get(*id).copied()));
                if let Some(ci) = m.ci.get(*id) {
                    let _ = write!(c, " [{}, {}]", ci.lo, ci.hi);
                }
                c
            })
            .collect();
        let _ = writeln!(w, "| {} | reported | {} |", m.metric_id, cells.join(" | "));
    }
    let excluded: Vec<&MetricResult> = b.metrics.iter().filter(|m| m.status == MetricStatus::Excluded).collect();
    let _ = writeln!(w, "\n### Excluded (assumption failed)\n");
    if excluded.is_empty() {
        let _ = writeln!(w, "none");
    }
    for m in excluded {
        let _ = writeln!(w, "- {}: {}", m.metric_id, m.reason.as_deref().unwrap_or(""));
    }
    let skipped: Vec<&MetricResult> = b.metrics.iter().filter(|m| m.status == MetricStatus::Skipped).collect();
    let _ = writeln!(w, "\n### Skipped\n");
    if skipped.is_empty() {
        let _ = writeln!(w, "none");
    }
    for m in skipped {
        let _ = writeln!(w, "- {}: {}", m.metric_id, m.reason.as_deref().unwrap_or(""));
    }

    let _ = writeln!(w, "\n## Assumptions\n");
    let _ = writeln!(w, "| id | held | statement | metrics |");
    let _ = writeln!(w, "|---|---|---|---|");
    for e in &b.ledger.assumptions {
        let _ = writeln!(w, "| {} | {} | {} | {} |", e.id, held(e.held), e.statement, e.affected_metrics.join(", "));
    }
    if !b.ledger.notes.is_empty() {
        let _ = writeln!(w, "\nNotes:\n");
        for n in &b.ledger.notes {
            let _ = writeln!(w, "- {n}");
        }
    }

    let _ = writeln!(w, "\n## Judges\n");
    for j in &b.judges {
        let _ = writeln!(
            w,
            "- {}: {} (ordered {}, identity {})",
            j.judge,
            if j.pass { "pass" } else { "fail" },
            j.ordered_fraction,
            j.identity_ok
        );
    }

    let _ = writeln!(w, "\n## Calibration\n");
    match &b.calibration {
        Section::Reported(c) => {
            let _ = writeln!(w, "Quantile-mapped onto `{}`; applied to {}.\n", c.target, c.applied_to.join(", "));
            for sc in &c.systems {
                let _ = writeln!(
                    w,
                    "- `{}`: mean diff {}, median diff {}, ks {} before and {} after, {} knots",
                    sc.system_id,
                    sc.mean_diff,
                    sc.median_diff,
                    sc.ks_before,
                    sc.ks_after,
                    sc.map.knots.len()
                );
                for warn in &sc.map.warnings {
                    let _ = writeln!(w, "  - warning: {warn}");
                }
            }
        }
        other => {
            let _ = writeln!(w, "{}", section_note(other));
        }
    }

    let _ = writeln!(w, "\n## Divergence hot-list\n");
    match &b.hotlist {
        Section::Reported(h) => {
            if h.all_zero {
                let _ = writeln!(w, "All listed inputs have zero disagreement.\n");
            }
            for i in &h.items {
                let _ = writeln!(w, "- {}: {} ({} systems)", i.input_id, i.disagreement, i.n_systems);
            }
        }
        other => {
            let _ = writeln!(w, "{}", section_note(other));
        }
    }

    let _ = writeln!(w, "\n## Games\n");
    match &b.games {
        Section::Reported(g) => {
            for gs in &g.games {
                let _ = writeln!(w, "- {}: {} matches, {} invalid", gs.game, gs.matches, gs.invalid.len());
                for (sys, d) in &gs.diversity {
                    let _ = writeln!(w, "  - `{sys}` strategy diversity (move-label entropy, bits): {d}");
                }
            }
            match &g.bradley_terry {
                Section::Reported(bt) => {
                    let _ = writeln!(w, "\nBradley-Terry strengths ({} iterations):\n", bt.iterations);
                    for (sys, p) in &bt.strengths {
                        let _ = writeln!(w, "- `{sys}`: {p}");
                    }
                }
                other => {
                    let _ = writeln!(w, "\nBradley-Terry: {}", section_note(other));
                }
            }
            let _ = writeln!(w, "\nCopeland scores:\n");
            for (sys, c) in &g.copeland.scores {
                let _ = writeln!(w, "- `{sys}`: {c}");
            }
        }
        other => {
            let _ = writeln!(w, "{}", section_note(other));
        }
    }

    let a = &b.audit;
    let _ = writeln!(w, "\n## Audit\n");
    let _ = writeln!(
        w,
        "selected {}, reported {}, skipped {} (excluded {}); reconciled: {}",
        a.totals.selected, a.totals.reported, a.totals.skipped, a.totals.excluded, a.reconciled
    );
    s
}

fn section_note<T>(s: &Section<T>) -> String {
    match s {
        Section::NotSelected => "Status: not selected.".into(),
        Section::Skipped { reason } => format!("Status: skipped ({reason})."),
        Section::Reported(_) => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Inner {
        x: f64,
    }

    #[test]
    fn section_status_tags() {
        let s: Section<Inner> = Section::NotSelected;
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"{"status":"not selected"}"#);
        let s = Section::Reported(Inner { x: 0.1 });
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, r#"{"status":"reported","x":0.1}"#);
        assert_eq!(serde_json::from_str::<Section<Inner>>(&text).unwrap(), s);
        let s: Section<Inner> = Section::Skipped { reason: "r".into() };
        assert_eq!(serde_json::from_str::<Section<Inner>>(&serde_json::to_string(&s).unwrap()).unwrap(), s);
    }
}
