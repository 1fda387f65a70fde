//! Orchestration of a full comparison run.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::{game_metric, RunConfig};
use super::dataset::load_dataset;
use super::hotlist::{divergence_hotlist, Hotlist};
use super::judge::{bundled_suite, judge_reliability, JudgeReport};
use super::report::*;
use crate::adapters::{Controls, InputRecord, SystemHandle, Trial};
use crate::aggregate::{
    bootstrap_ci, bradley_terry, copeland, normalize_directional, pareto_order, sensitivity_analysis, weighted_aggregate,
    DirectionalScore, Statistic, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::assumptions::{self, validate_assumptions, AssumptionLedger, Held};
use crate::capability::{
    agreement_rate, distribution_shift, fairness_shift, group_rates, ks_statistic, operational_metrics, quantile_map,
    read_benchmarks, trigger_rate, BenchmarkRecord, Decision, ReviewPair, ReviewSource,
};
use crate::catalog::{self, Dimension};
use crate::error::{Error, Result};
use crate::games::{tournament, GameKind, GameSpec, TournamentResult, WinMatrix, Winner};
use crate::perturb::{generate_variants, Lexicon, VariantKind, VariantSpec};
use crate::predictability::{
    consensus_labels, control_stability, cross_consensus, input_stability, intraclass_correlation, self_consistency,
    uncertainty_profile, LeveledTrial,
};
use crate::risk::{marginal_risk, RiskProfile};
use crate::rng::{mix, stable_hash};
use crate::similarity::{similarity, Output, SimilarityKind};
use crate::stats;

pub const TOOL_NAME: &str = "marginal-risk";
pub const HUMAN_TAG: &str = "human";

/// Why a trial was generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "purpose", rename_all = "kebab-case")]
pub enum Purpose {
    Repeat { index: usize },
    Stability { kind: VariantKind },
    Ambiguity { level: f64 },
    Control,
}

impl Purpose {
    pub fn name(&self) -> &'static str {
        match self {
            Purpose::Repeat { .. } => "repeat",
            Purpose::Stability { .. } => "stability",
            Purpose::Ambiguity { .. } => "ambiguity",
            Purpose::Control => "control",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggedTrial {
    pub purpose: Purpose,
    pub trial: Trial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub system_id: String,
    pub trial_id: String,
    pub purpose: String,
    pub error: String,
}

/// Everything a run produced; the bundle is the report, the rest are the
/// per-trial and per-match artefacts written beside it.
pub struct RunOutput {
    pub bundle: ReportBundle,
    pub trials: Vec<TaggedTrial>,
    pub failures: Vec<TrialFailure>,
    pub tournaments: Vec<(GameSpec, TournamentResult)>,
}

struct Job {
    sys: usize,
    input: InputRecord,
    controls: Controls,
    seed: u64,
    purpose: Purpose,
}

fn repeat_seed(run_seed: u64, r: usize) -> u64 {
    mix(&[run_seed, r as u64])
}

fn selected_has(selected: &[String], id: &str) -> bool {
    selected.iter().any(|m| m == id)
}

/// Perturbed copies of one input, numbered consecutively across `specs`
/// starting after `offset`.
fn variants_for(
    input: &InputRecord,
    specs: &[VariantSpec],
    offset: &mut u32,
    run_seed: u64,
    lexicon: Option<&Lexicon>,
) -> Result<Vec<(VariantKind, InputRecord)>> {
    let mut out = Vec::new();
    for spec in specs {
        let seeded = VariantSpec::new(spec.kind, spec.count, mix(&[run_seed, spec.seed, stable_hash(&input.input_id)]));
        for v in generate_variants(&input.payload, &seeded, lexicon)? {
            out.push((spec.kind, input.variant(*offset + v.variant_id, v.text)));
        }
        *offset += spec.count;
    }
    Ok(out)
}

fn plan_jobs(
    cfg: &RunConfig,
    systems: &[SystemHandle],
    dataset: &[InputRecord],
    selected: &[String],
    lexicon: Option<&Lexicon>,
) -> Result<Vec<Job>> {
    let p = &cfg.predictability;
    let seed = cfg.run.seed;
    let repeats = if cfg.selected(Dimension::Predictability) { p.repeats } else { 1 };
    let want_stability = selected_has(selected, catalog::INPUT_STABILITY);
    let want_ambiguity = selected_has(selected, catalog::UNCERTAINTY_GOVERNANCE);
    let probe = p.control.as_ref().filter(|_| selected_has(selected, catalog::CONTROL_STABILITY));

    let mut jobs = Vec::new();
    for input in dataset {
        let mut offset = 0;
        let stability = if want_stability {
            variants_for(input, &p.variants, &mut offset, seed, lexicon)?
        } else {
            Vec::new()
        };
        let ambiguity = if want_ambiguity {
            variants_for(input, &p.ambiguity, &mut offset, seed, lexicon)?
        } else {
            Vec::new()
        };
        for (sys, handle) in systems.iter().enumerate() {
            for r in 0..repeats {
                jobs.push(Job {
                    sys,
                    input: input.clone(),
                    controls: Controls::new(),
                    seed: repeat_seed(seed, r),
                    purpose: Purpose::Repeat { index: r },
                });
            }
            for (kind, v) in &stability {
                jobs.push(Job {
                    sys,
                    input: v.clone(),
                    controls: Controls::new(),
                    seed: repeat_seed(seed, 0),
                    purpose: Purpose::Stability { kind: *kind },
                });
            }
            for (kind, v) in &ambiguity {
                for r in 0..repeats {
                    jobs.push(Job {
                        sys,
                        input: v.clone(),
                        controls: Controls::new(),
                        seed: repeat_seed(seed, r),
                        purpose: Purpose::Ambiguity { level: kind.ambiguity() },
                    });
                }
            }
            if let Some(probe) = probe.filter(|_| handle.accepts_controls()) {
                for v in &probe.values {
                    jobs.push(Job {
                        sys,
                        input: input.clone(),
                        controls: Controls::from([(probe.name.clone(), *v)]),
                        seed: repeat_seed(seed, 0),
                        purpose: Purpose::Control,
                    });
                }
            }
        }
    }
    Ok(jobs)
}

/// Per-system result of one metric before normalisation.
struct SysValue {
    value: f64,
    samples: Vec<f64>,
    detail: Value,
}

impl SysValue {
    fn new(value: f64, samples: Vec<f64>, detail: Value) -> Self {
        Self { value, samples, detail }
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    systems: &'a [SystemHandle],
    dataset: &'a [InputRecord],
    baseline: usize,
    ledger: AssumptionLedger,
    judge: SimilarityKind,
    /// Trials per system in job order.
    by_sys: Vec<Vec<&'a TaggedTrial>>,
    /// (system, purpose) → failure count and first message.
    failed: BTreeMap<(usize, &'static str), (usize, String)>,
    /// Calibrated capability scores per system; the baseline is never mapped.
    calibrated: Vec<std::result::Result<BTreeMap<String, f64>, String>>,
    consensus: BTreeMap<String, String>,
    benchmarks: Vec<BenchmarkRecord>,
}

impl<'a> Ctx<'a> {
    fn need(&self, s: usize, purposes: &[&'static str]) -> Result<()> {
        for p in purposes {
            if let Some((n, first)) = self.failed.get(&(s, *p)) {
                return Err(Error::InsufficientData(format!("{n} {p} trials failed; first: {first}")));
            }
        }
        Ok(())
    }

    fn trials(&self, s: usize, purpose: &'static str) -> impl Iterator<Item = &'a TaggedTrial> + '_ {
        self.by_sys[s].iter().copied().filter(move |t| t.purpose.name() == purpose)
    }

    /// Repeat trials per input, in repeat order.
    fn repeats(&self, s: usize) -> BTreeMap<&'a str, Vec<&'a Trial>> {
        let mut out: BTreeMap<&str, Vec<&Trial>> = BTreeMap::new();
        for t in self.trials(s, "repeat") {
            out.entry(t.trial.input_id.as_str()).or_default().push(&t.trial);
        }
        out
    }

    /// First-repeat answer per input, abstentions dropped.
    fn firsts(&self, s: usize) -> BTreeMap<&'a str, &'a Trial> {
        self.trials(s, "repeat")
            .filter(|t| matches!(t.purpose, Purpose::Repeat { index: 0 }) && !t.trial.abstained)
            .map(|t| (t.trial.input_id.as_str(), &t.trial))
            .collect()
    }

    fn scores(&self, s: usize) -> Result<BTreeMap<String, f64>> {
        self.need(s, &["repeat"])?;
        let mut out = BTreeMap::new();
        for (input, t) in self.firsts(s) {
            let v = t.output.as_number().ok_or_else(|| {
                Error::InvalidComparison(format!("`{}` answered `{input}` with text; review scores must be numeric", t.system_id))
            })?;
            out.insert(input.to_string(), v);
        }
        if out.is_empty() {
            return Err(Error::InsufficientData(format!("`{}` answered no input", self.systems[s].id)));
        }
        Ok(out)
    }

    fn labelled(&self, t: &Trial) -> Trial {
        let mut t = t.clone();
        if let (Some(th), Some(v)) = (self.cfg.predictability.label_threshold, t.output.as_number()) {
            t.output = Output::Text(if v >= th { "accept" } else { "reject" }.into());
        }
        t
    }

    fn decisions(&self, s: usize) -> Result<Vec<Decision>> {
        self.need(s, &["repeat"])?;
        let c = &self.cfg.capability;
        let groups: BTreeMap<&str, &str> = self
            .dataset
            .iter()
            .filter_map(|r| r.group.as_deref().map(|g| (r.input_id.as_str(), g)))
            .collect();
        let mut out = Vec::new();
        for (input, t) in self.firsts(s) {
            let Some(g) = groups.get(input) else { continue };
            let positive = match &t.output {
                Output::Number(v) => *v >= c.accept_threshold,
                Output::Text(_) => t.output.label() == c.positive_label.trim().to_lowercase(),
            };
            out.push(Decision::new(input, *g, if positive { 1.0 } else { 0.0 }));
        }
        Ok(out)
    }

    fn source(&self, a: usize, b: usize) -> ReviewSource {
        let human = |s: usize| self.systems[s].provenance_tags.iter().any(|t| t == HUMAN_TAG);
        match (human(a), human(b)) {
            (true, true) => ReviewSource::HumanHuman,
            (false, false) => ReviewSource::AiAi,
            _ => ReviewSource::HumanAi,
        }
    }

    /// Pooled review pairs of `s` against every other system on shared inputs.
    fn review_pairs(&self, s: usize) -> Result<BTreeMap<String, Vec<ReviewPair>>> {
        let mine = self.calibrated[s].as_ref().map_err(|e| Error::InsufficientData(e.clone()))?;
        let mut out = BTreeMap::new();
        for o in (0..self.systems.len()).filter(|o| *o != s) {
            let theirs = self.calibrated[o].as_ref().map_err(|e| Error::InsufficientData(e.clone()))?;
            let pairs: Vec<ReviewPair> = mine
                .iter()
                .filter_map(|(i, a)| theirs.get(i).map(|b| ReviewPair::new(i.clone(), *a, *b, self.source(s, o))))
                .collect();
            out.insert(self.systems[o].id.clone(), pairs);
        }
        Ok(out)
    }
}

fn m_self_consistency(ctx: &Ctx, s: usize) -> Result<SysValue> {
    ctx.need(s, &["repeat"])?;
    let mut sims = Vec::new();
    let mut disp = Vec::new();
    let mut skipped = 0usize;
    for trials in ctx.repeats(s).values() {
        if trials.iter().any(|t| t.abstained) {
            skipped += 1;
            continue;
        }
        let owned: Vec<Trial> = trials.iter().map(|t| (*t).clone()).collect();
        let sc = self_consistency(&owned, ctx.judge)?;
        sims.push(sc.mean_pairwise_similarity);
        disp.push(sc.dispersion);
    }
    let value = stats::mean(&sims).ok_or_else(|| Error::InsufficientData("no input was answered in every repeat".into()))?;
    let detail = json!({
        "mean_dispersion": stats::mean(&disp),
        "max_dispersion": disp.iter().copied().fold(0.0, f64::max),
        "inputs": sims.len(),
        "abstained_inputs": skipped,
    });
    Ok(SysValue::new(value, sims, detail))
}

fn m_icc(ctx: &Ctx, s: usize) -> Result<SysValue> {
    ctx.need(s, &["repeat"])?;
    let mut rows = Vec::new();
    for trials in ctx.repeats(s).values() {
        if trials.iter().any(|t| t.abstained) {
            continue;
        }
        let row: Option<Vec<f64>> = trials.iter().map(|t| t.output.as_number()).collect();
        rows.push(row.ok_or_else(|| Error::InvalidComparison("ICC needs numeric outputs".into()))?);
    }
    let v = intraclass_correlation(&rows)?;
    Ok(SysValue::new(v, Vec::new(), json!({ "items": rows.len(), "runs": rows.first().map_or(0, Vec::len) })))
}

fn m_cross_consensus(ctx: &Ctx, s: usize) -> Result<SysValue> {
    ctx.need(s, &["repeat"])?;
    let mine = ctx.firsts(s);
    let me = &ctx.systems[s].id;
    let mut per_opponent = BTreeMap::new();
    let mut per_input: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for o in (0..ctx.systems.len()).filter(|o| *o != s) {
        ctx.need(o, &["repeat"])?;
        let theirs = ctx.firsts(o);
        let other = &ctx.systems[o].id;
        let mut maps = Vec::new();
        for (input, t) in &mine {
            if let Some(u) = theirs.get(input) {
                per_input.entry(input).or_default().push(similarity(&t.output, &u.output, ctx.judge)?);
                maps.push(BTreeMap::from([(me.clone(), t.output.clone()), (other.clone(), u.output.clone())]));
            }
        }
        per_opponent.insert(other.clone(), cross_consensus(&maps, ctx.judge, &ctx.ledger)?);
    }
    let vals: Vec<f64> = per_opponent.values().copied().collect();
    let value = stats::mean(&vals).ok_or_else(|| Error::InsufficientData("no other system".into()))?;
    let samples = per_input.values().filter_map(|v| stats::mean(v)).collect();
    Ok(SysValue::new(value, samples, json!({ "per_opponent": per_opponent })))
}

fn m_input_stability(ctx: &Ctx, s: usize) -> Result<SysValue> {
    ctx.need(s, &["repeat", "stability"])?;
    let firsts = ctx.firsts(s);
    let mut variants: BTreeMap<&str, Vec<(VariantKind, Trial)>> = BTreeMap::new();
    for t in ctx.trials(s, "stability") {
        if let Purpose::Stability { kind } = t.purpose {
            if !t.trial.abstained {
                variants.entry(t.trial.input_id.as_str()).or_default().push((kind, t.trial.clone()));
            }
        }
    }
    let mut overall = Vec::new();
    let mut kinds: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (input, original) in &firsts {
        let Some(vs) = variants.get(input) else { continue };
        let score = input_stability(original, vs, ctx.judge)?;
        overall.push(score.overall);
        for (k, v) in score.per_kind {
            kinds.entry(k).or_default().push(v);
        }
    }
    let value = stats::mean(&overall).ok_or_else(|| Error::InsufficientData("no input has answered variants".into()))?;
    let per_kind: BTreeMap<String, Option<f64>> = kinds.into_iter().map(|(k, v)| (k, stats::mean(&v))).collect();
    Ok(SysValue::new(value, overall, json!({ "per_kind": per_kind })))
}

fn m_control_stability(ctx: &Ctx, s: usize) -> Result<SysValue> {
    let probe = ctx
        .cfg
        .predictability
        .control
        .as_ref()
        .ok_or_else(|| Error::Config("no control probe is configured".into()))?;
    let sys = &ctx.systems[s];
    if !sys.accepts_controls() {
        return Err(Error::InvalidComparison(format!("`{}` is a {} system and takes no controls", sys.id, sys.kind.name())));
    }
    ctx.need(s, &["control"])?;
    let trials: Vec<Trial> = ctx.trials(s, "control").map(|t| t.trial.clone()).collect();
    let curve = control_stability(&trials, probe.bounds.map(|[lo, hi]| (lo, hi)))?;
    Ok(SysValue::new(curve.spearman_rho, Vec::new(), serde_json::to_value(&curve)?))
}

fn m_uncertainty(ctx: &Ctx, s: usize) -> Result<SysValue> {
    ctx.need(s, &["repeat", "ambiguity"])?;
    let mut leveled: Vec<LeveledTrial> = ctx
        .trials(s, "repeat")
        .map(|t| LeveledTrial { level: 0.0, trial: ctx.labelled(&t.trial) })
        .collect();
    for t in ctx.trials(s, "ambiguity") {
        if let Purpose::Ambiguity { level } = t.purpose {
            leveled.push(LeveledTrial { level, trial: ctx.labelled(&t.trial) });
        }
    }
    let profile = uncertainty_profile(&leveled, &ctx.consensus, &ctx.cfg.predictability.coverages)?;
    Ok(SysValue::new(profile.mean_selective_disagreement(), Vec::new(), serde_json::to_value(&profile)?))
}

fn indicator(b: bool) -> f64 {
    if b { 1.0 } else { 0.0 }
}

fn m_agreement(ctx: &Ctx, s: usize) -> Result<SysValue> {
    let tol = ctx.cfg.capability.agreement_tolerance;
    let by_opp = ctx.review_pairs(s)?;
    let pooled: Vec<ReviewPair> = by_opp.values().flatten().cloned().collect();
    let value = agreement_rate(&pooled, tol, &ctx.ledger)?;
    let mut per_opponent = BTreeMap::new();
    for (o, pairs) in &by_opp {
        per_opponent.insert(o.clone(), agreement_rate(pairs, tol, &ctx.ledger).ok());
    }
    let samples = pooled.iter().map(|p| indicator(p.gap() <= tol)).collect();
    Ok(SysValue::new(value, samples, json!({ "pairs": pooled.len(), "per_opponent": per_opponent })))
}

fn m_trigger(ctx: &Ctx, s: usize) -> Result<SysValue> {
    let th = ctx.cfg.capability.trigger_threshold;
    let by_opp = ctx.review_pairs(s)?;
    let pooled: Vec<ReviewPair> = by_opp.values().flatten().cloned().collect();
    let summary = trigger_rate(&pooled, th)?;
    let mut per_opponent = BTreeMap::new();
    for (o, pairs) in &by_opp {
        per_opponent.insert(o.clone(), trigger_rate(pairs, th).ok().map(|t| json!({ "rate": t.rate, "triggered": t.triggered })));
    }
    let samples = pooled.iter().map(|p| indicator(p.gap() > th)).collect();
    Ok(SysValue::new(summary.rate, samples, json!({ "pairs": pooled.len(), "per_opponent": per_opponent })))
}

fn m_distribution_shift(ctx: &Ctx, s: usize) -> Result<SysValue> {
    let mine: Vec<f64> = ctx.scores(s)?.into_values().collect();
    let base: Vec<f64> = ctx.scores(ctx.baseline)?.into_values().collect();
    let shift = distribution_shift(&mine, &base)?;
    Ok(SysValue::new(shift.ks, Vec::new(), serde_json::to_value(&shift)?))
}

fn m_fairness(ctx: &Ctx, s: usize) -> Result<SysValue> {
    let mine = ctx.decisions(s)?;
    let rates = group_rates(&mine);
    if rates.len() < 2 {
        return Err(Error::InsufficientData(format!("fairness needs at least 2 groups, found {}", rates.len())));
    }
    let hi = rates.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = rates.values().copied().fold(f64::INFINITY, f64::min);
    let vs_baseline = match ctx.decisions(ctx.baseline).and_then(|b| fairness_shift(&mine, &b)) {
        Ok(f) => json!({ "deltas": f.deltas, "baseline_rates": f.baseline_rates, "warnings": f.warnings }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    Ok(SysValue::new(hi - lo, Vec::new(), json!({ "rates": rates, "vs_baseline": vs_baseline })))
}

fn m_operational(ctx: &Ctx, s: usize) -> Result<SysValue> {
    let trials: Vec<Trial> = ctx.by_sys[s].iter().map(|t| t.trial.clone()).collect();
    let summary = operational_metrics(&trials)?;
    let samples = trials.iter().map(|t| t.latency_ms).collect();
    Ok(SysValue::new(summary.mean_latency_ms, samples, serde_json::to_value(&summary)?))
}

fn m_benchmark(ctx: &Ctx, name: &str, s: usize) -> Result<SysValue> {
    let id = &ctx.systems[s].id;
    let r = ctx
        .benchmarks
        .iter()
        .find(|r| r.benchmark == name && &r.system_id == id)
        .ok_or_else(|| Error::InsufficientData(format!("no `{name}` score for `{id}`")))?;
    Ok(SysValue::new(r.score, Vec::new(), json!({ "provenance": r.provenance })))
}

/// Computes one metric for every system and normalises it; any failure
/// turns the whole metric into a skip with the reasons attached.
fn assemble(ctx: &Ctx, id: &str, compute: impl Fn(usize) -> Result<SysValue>) -> MetricResult {
    let spec = catalog::lookup(id).expect("selected metrics come from the catalogue");
    let mut r = MetricResult {
        metric_id: id.to_string(),
        dimension: spec.dimension,
        risk_dimension: spec.risk_dimension.to_string(),
        orientation: spec.orientation,
        bounds: spec.bounds,
        status: MetricStatus::Reported,
        reason: None,
        citations: ctx.ledger.citations(id),
        values: BTreeMap::new(),
        directional: BTreeMap::new(),
        ci: BTreeMap::new(),
        details: BTreeMap::new(),
    };
    if let Some(e) = ctx.ledger.failed_for(id) {
        r.status = MetricStatus::Excluded;
        r.reason = Some(format!("assumption `{}` does not hold: {}", e.id, e.statement));
        return r;
    }
    let mut errors = Vec::new();
    let mut samples = BTreeMap::new();
    for (s, sys) in ctx.systems.iter().enumerate() {
        match compute(s) {
            Ok(v) => {
                r.values.insert(sys.id.clone(), v.value);
                r.details.insert(sys.id.clone(), v.detail);
                samples.insert(sys.id.clone(), v.samples);
            }
            Err(Error::MethodInadmissible { assumption, .. }) => {
                r.status = MetricStatus::Excluded;
                r.reason = Some(format!("assumption `{assumption}` does not hold"));
                r.values.clear();
                r.details.clear();
                return r;
            }
            Err(e) => errors.push(format!("`{}`: {e}", sys.id)),
        }
    }
    if !errors.is_empty() {
        r.status = MetricStatus::Skipped;
        r.reason = Some(errors.join("; "));
        r.values.clear();
        r.details.clear();
        return r;
    }
    match normalize_directional(id, &r.values, spec.orientation, spec.bounds) {
        Ok(d) => r.directional = d.into_iter().map(|(k, v)| (k, v.value)).collect(),
        Err(e) => {
            r.status = MetricStatus::Skipped;
            r.reason = Some(format!("normalisation failed: {e}"));
            r.values.clear();
            r.details.clear();
            return r;
        }
    }
    let agg = &ctx.cfg.aggregate;
    for (sys, xs) in samples {
        if xs.len() >= 2 {
            let seed = mix(&[ctx.cfg.run.seed, stable_hash("bootstrap"), stable_hash(id), stable_hash(&sys)]);
            if let Ok(ci) = bootstrap_ci(&xs, Statistic::Mean, agg.bootstrap_resamples, agg.level, seed) {
                r.ci.insert(sys, ci);
            }
        }
    }
    r
}

fn judge_entry(j: SimilarityKind) -> String {
    format!("judge-reliable:{j}")
}

/// Judges the run relies on and the metrics each one feeds.
fn judges_in_use(cfg: &RunConfig, selected: &[String]) -> BTreeMap<String, (SimilarityKind, Vec<String>)> {
    let mut out: BTreeMap<String, (SimilarityKind, Vec<String>)> = BTreeMap::new();
    let mut add = |j: SimilarityKind, m: &str| {
        let e = out.entry(j.to_string()).or_insert((j, Vec::new()));
        if selected_has(selected, m) && !e.1.iter().any(|x| x == m) {
            e.1.push(m.to_string());
        }
    };
    let pj = cfg.predictability.judge;
    for m in [catalog::SELF_CONSISTENCY, catalog::CROSS_CONSENSUS, catalog::INPUT_STABILITY] {
        add(pj, m);
    }
    if cfg.selected(Dimension::Interaction) {
        for g in &cfg.interaction.games {
            add(g.judge, game_metric(g.kind));
        }
    }
    out
}

fn config_digest(cfg: &RunConfig) -> Result<String> {
    let mut canonical = cfg.clone();
    canonical.run.out = None;
    canonical.run.workers = 0;
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&canonical)?);
    let mut files = vec![cfg.resolve(&cfg.dataset.path)];
    files.extend(cfg.dataset.lexicon.iter().map(|p| cfg.resolve(p)));
    files.extend(cfg.capability.benchmarks.iter().map(|p| cfg.resolve(p)));
    files.extend(cfg.systems.iter().filter_map(|s| s.path.as_ref()).map(|p| cfg.resolve(p)));
    for f in files {
        let bytes = fs::read(&f).map_err(|e| Error::io(&f, e))?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    Ok(hex::encode(h.finalize()))
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

/// Game output of a run: per-game tournaments on the hot-list topics.
pub struct GamesOutput {
    pub section: GamesSection,
    pub tournaments: Vec<(GameSpec, TournamentResult)>,
}

fn game_seed(run_seed: u64, index: usize) -> u64 {
    mix(&[run_seed, stable_hash("games"), index as u64])
}

/// Plays every configured game over `topics`.
pub fn play_games(cfg: &RunConfig, systems: &[SystemHandle], topics: &[String]) -> Result<GamesOutput> {
    let ids: Vec<String> = systems.iter().map(|s| s.id.clone()).collect();
    let mut combined = WinMatrix::new(ids)?;
    let mut games = Vec::new();
    let mut tournaments = Vec::new();
    for (gi, spec) in cfg.interaction.games.iter().enumerate() {
        let seed = game_seed(cfg.run.seed, gi);
        let t = tournament(spec, systems, topics, cfg.interaction.matches_per_pair, seed)?;
        combined.merge(&t.matrix)?;
        games.push(GameSummary {
            game: spec.kind.to_string(),
            rounds: spec.rounds,
            judge: spec.judge.to_string(),
            seed,
            matches: t.matches.len(),
            win_matrix: t.matrix.clone(),
            diversity: t.diversity.clone(),
            invalid: t.invalid.clone(),
        });
        tournaments.push((spec.clone(), t));
    }
    let bradley_terry = match bradley_terry(&combined, DEFAULT_MAX_ITER, DEFAULT_TOL) {
        Ok(fit) => Section::Reported(fit),
        Err(e) => Section::Skipped { reason: e.to_string() },
    };
    let copeland = copeland(&combined);
    Ok(GamesOutput {
        section: GamesSection {
            topics: topics.to_vec(),
            games,
            combined,
            bradley_terry,
            copeland,
        },
        tournaments,
    })
}

/// Win rate (wins plus half ties over valid matches) per system for one game kind.
fn game_values(kind: GameKind, tournaments: &[(GameSpec, TournamentResult)], id: &str) -> Result<SysValue> {
    let mut points = Vec::new();
    for (_, t) in tournaments.iter().filter(|(spec, _)| spec.kind == kind) {
        for m in &t.matches {
            let side = if m.transcript.a == id {
                Some(true)
            } else if m.transcript.b == id {
                Some(false)
            } else {
                None
            };
            if let Some(is_a) = side {
                points.push(match (m.winner, is_a) {
                    (Winner::Tie, _) => 0.5,
                    (Winner::A, true) | (Winner::B, false) => 1.0,
                    _ => 0.0,
                });
            }
        }
    }
    let invalid: usize = tournaments
        .iter()
        .filter(|(spec, _)| spec.kind == kind)
        .map(|(_, t)| t.invalid.iter().filter(|m| m.a == id || m.b == id).count())
        .sum();
    let value = stats::mean(&points).ok_or_else(|| Error::InsufficientData(format!("`{id}` has no valid {kind} matches")))?;
    Ok(SysValue::new(value, points.clone(), json!({ "valid_matches": points.len(), "invalid_matches": invalid })))
}

/// Runs every phase for `cfg` and returns the report with its artefacts.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunOutput> {
    // Phase 1: intake
    cfg.validate()?;
    let systems = cfg.build_systems()?;
    let dataset = load_dataset(&cfg.resolve(&cfg.dataset.path))?;
    let lexicon = match &cfg.dataset.lexicon {
        Some(p) => Some(Lexicon::from_file(&cfg.resolve(p))?),
        None => None,
    };
    let benchmarks = match (&cfg.capability.benchmarks, cfg.selected(Dimension::Capability)) {
        (Some(p), true) => read_benchmarks(&cfg.resolve(p))?,
        _ => Vec::new(),
    };
    let bench_names: Vec<String> = benchmarks
        .iter()
        .map(|b| b.benchmark.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let selected = cfg.selected_metrics(&bench_names);
    let ids = cfg.system_ids();
    let baseline = ids.iter().position(|i| *i == cfg.run.baseline).expect("validated");

    let mut ledger = validate_assumptions(&ids, &cfg.provenance);
    for m in selected.iter().filter(|m| m.starts_with(catalog::BENCHMARK_PREFIX)) {
        for a in [
            assumptions::NO_GROUND_TRUTH,
            assumptions::EXPERT_EVALUATION_UNAVAILABLE,
            assumptions::OBSERVABLE_OUTPUTS_ONLY,
            assumptions::METHOD_SUBSET,
        ] {
            ledger.cite(a, m);
        }
    }
    let mut judges: Vec<JudgeReport> = Vec::new();
    for (name, (j, affected)) in judges_in_use(cfg, &selected) {
        let report = judge_reliability(j, &bundled_suite(j));
        let held = if report.pass { Held::Yes } else { Held::No };
        ledger.record(
            judge_entry(j),
            format!(
                "The {name} judge behaves consistently on its control suite (ordered fraction {}, identity {})",
                report.ordered_fraction,
                if report.identity_ok { "holds" } else { "fails" }
            ),
            held,
            affected,
        );
        judges.push(report);
    }
    ledger.restrict_to(&selected);

    let mut notes = Vec::new();
    for d in Dimension::ALL {
        if !cfg.selected(d) {
            notes.push(format!("dimension `{}` not selected; its metrics and sections are omitted", d.as_str()));
        }
    }
    notes.push("risk scores are unitless: each risk dimension is the mean of (1 − directional score) over the reported metrics feeding it".into());
    if cfg.selected(Dimension::Capability) {
        notes.push(format!(
            "agreement tolerance {} and trigger threshold {}; each system is paired with every other system on shared inputs",
            cfg.capability.agreement_tolerance, cfg.capability.trigger_threshold
        ));
        notes.push(format!(
            "decisions for fairness: numeric outputs ≥ {} or the label `{}` count as positive",
            cfg.capability.accept_threshold, cfg.capability.positive_label
        ));
    }
    if cfg.selected(Dimension::Interaction) {
        for g in &cfg.interaction.games {
            notes.push(format!(
                "{}: {} rounds, budget {}, penalty weight {}, novelty threshold {}, judge {}",
                g.kind, g.rounds, g.budget, g.penalty_weight, g.novelty_threshold, g.judge
            ));
        }
        notes.push(
            "strategy diversity is read as the Shannon entropy of move labels; it is an interpretation, not a fixed definition"
                .to_string(),
        );
    }

    // Phase 2: trials
    let pool = thread_pool(cfg.run.workers)?;
    let jobs = plan_jobs(cfg, &systems, &dataset, &selected, lexicon.as_ref())?;
    let outcomes: Vec<std::result::Result<TaggedTrial, TrialFailure>> = pool.install(|| {
        jobs.par_iter()
            .map(|j| {
                let sys = &systems[j.sys];
                sys.invoke(&j.input, &j.controls, j.seed)
                    .map(|trial| TaggedTrial { purpose: j.purpose, trial })
                    .map_err(|e| TrialFailure {
                        system_id: sys.id.clone(),
                        trial_id: Trial::trial_id(&sys.id, &j.input.input_id, j.input.variant_id, j.seed, &j.controls),
                        purpose: j.purpose.name().to_string(),
                        error: e.to_string(),
                    })
            })
            .collect()
    });
    let mut trials = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(t) => trials.push(t),
            Err(f) => failures.push(f),
        }
    }

    let mut by_sys: Vec<Vec<&TaggedTrial>> = vec![Vec::new(); systems.len()];
    for t in &trials {
        let s = ids.iter().position(|i| *i == t.trial.system_id).expect("trial from a configured system");
        by_sys[s].push(t);
    }
    let mut failed: BTreeMap<(usize, &'static str), (usize, String)> = BTreeMap::new();
    for f in &failures {
        let s = ids.iter().position(|i| *i == f.system_id).expect("failure from a configured system");
        let purpose = match f.purpose.as_str() {
            "repeat" => "repeat",
            "stability" => "stability",
            "ambiguity" => "ambiguity",
            _ => "control",
        };
        let e = failed.entry((s, purpose)).or_insert((0, f.error.clone()));
        e.0 += 1;
    }
    if !failures.is_empty() {
        notes.push(format!("{} trials failed; metrics depending on them are skipped", failures.len()));
    }

    let mut ctx = Ctx {
        cfg,
        systems: &systems,
        dataset: &dataset,
        baseline,
        ledger,
        judge: cfg.predictability.judge,
        by_sys,
        failed,
        calibrated: Vec::new(),
        consensus: BTreeMap::new(),
        benchmarks,
    };
    let level0: Vec<Trial> = (0..systems.len())
        .flat_map(|s| ctx.trials(s, "repeat").map(|t| ctx.labelled(&t.trial)).collect::<Vec<_>>())
        .collect();
    ctx.consensus = consensus_labels(&level0);

    // Phase 3 step 8 runs ahead of metric execution because agreement and
    // trigger rates consume the mapped scores.
    let calibrating = cfg.selected(Dimension::Capability) && cfg.capability.calibrate;
    let mut calib_systems = Vec::new();
    let mut calib_error = None;
    let base_scores = ctx.scores(baseline);
    for s in 0..systems.len() {
        let entry = match (&base_scores, ctx.scores(s)) {
            (_, Err(e)) => Err(e.to_string()),
            (_, Ok(mine)) if !calibrating || s == baseline => Ok(mine),
            (Err(e), Ok(_)) => Err(format!("baseline scores unavailable: {e}")),
            (Ok(base), Ok(mine)) => {
                let src: Vec<f64> = mine.values().copied().collect();
                let tgt: Vec<f64> = base.values().copied().collect();
                match (quantile_map(&src, &tgt), distribution_shift(&src, &tgt)) {
                    (Ok(map), Ok(shift)) => {
                        let mapped = map.apply_all(&src);
                        calib_systems.push(SystemCalibration {
                            system_id: ids[s].clone(),
                            mean_diff: shift.mean_diff,
                            median_diff: shift.median_diff,
                            ks_before: shift.ks,
                            ks_after: ks_statistic(&mapped, &tgt),
                            map: map.clone(),
                        });
                        Ok(mine.iter().map(|(k, v)| (k.clone(), map.apply(*v))).collect())
                    }
                    (Err(e), _) | (_, Err(e)) => {
                        calib_error.get_or_insert_with(|| format!("`{}`: {e}", ids[s]));
                        Err(format!("calibration failed: {e}"))
                    }
                }
            }
        };
        ctx.calibrated.push(entry);
    }
    let calibration = if !cfg.selected(Dimension::Capability) || !cfg.capability.calibrate {
        Section::NotSelected
    } else if let Some(reason) = calib_error {
        Section::Skipped { reason }
    } else {
        Section::Reported(CalibrationSection {
            target: ids[baseline].clone(),
            applied_to: vec![catalog::AGREEMENT_RATE.into(), catalog::TRIGGER_RATE.into()],
            systems: calib_systems,
        })
    };
    if calibrating {
        notes.push("quantile calibration onto the baseline is applied to agreement and trigger comparisons only".into());
    }

    // Phase 2 step 6 / Phase 3 step 9: divergence
    let all_trials: Vec<Trial> = trials.iter().filter(|t| matches!(t.purpose, Purpose::Repeat { .. })).map(|t| t.trial.clone()).collect();
    let hot = divergence_hotlist(&all_trials, ctx.judge, cfg.interaction.hotlist_k);
    if let Ok(h) = &hot {
        if h.all_zero {
            notes.push("every hot-list input has zero cross-system disagreement".into());
        }
    }

    // Phase 3 step 10: targeted games on the hot-list
    let mut games_out: Option<std::result::Result<GamesOutput, String>> = None;
    if cfg.selected(Dimension::Interaction) {
        games_out = Some(match &hot {
            Ok(h) => {
                let topics = topics_for(h, &dataset);
                pool.install(|| play_games(cfg, &systems, &topics)).map_err(|e| e.to_string())
            }
            Err(e) => Err(format!("no game topics: {e}")),
        });
    }

    // Phase 2 step 5: metric execution
    let mut metrics = Vec::new();
    for id in &selected {
        let m = match id.as_str() {
            catalog::SELF_CONSISTENCY => assemble(&ctx, id, |s| m_self_consistency(&ctx, s)),
            catalog::ICC => assemble(&ctx, id, |s| m_icc(&ctx, s)),
            catalog::CROSS_CONSENSUS => assemble(&ctx, id, |s| m_cross_consensus(&ctx, s)),
            catalog::INPUT_STABILITY => assemble(&ctx, id, |s| m_input_stability(&ctx, s)),
            catalog::CONTROL_STABILITY => assemble(&ctx, id, |s| m_control_stability(&ctx, s)),
            catalog::UNCERTAINTY_GOVERNANCE => assemble(&ctx, id, |s| m_uncertainty(&ctx, s)),
            catalog::AGREEMENT_RATE => assemble(&ctx, id, |s| m_agreement(&ctx, s)),
            catalog::TRIGGER_RATE => assemble(&ctx, id, |s| m_trigger(&ctx, s)),
            catalog::DISTRIBUTION_SHIFT => assemble(&ctx, id, |s| m_distribution_shift(&ctx, s)),
            catalog::FAIRNESS_SHIFT => assemble(&ctx, id, |s| m_fairness(&ctx, s)),
            catalog::OPERATIONAL_EFFICIENCY => assemble(&ctx, id, |s| m_operational(&ctx, s)),
            other if other.starts_with(catalog::BENCHMARK_PREFIX) => {
                let name = &other[catalog::BENCHMARK_PREFIX.len()..];
                assemble(&ctx, id, |s| m_benchmark(&ctx, name, s))
            }
            other => {
                let kind = GameKind::ALL.into_iter().find(|k| game_metric(*k) == other).expect("catalogue game metric");
                assemble(&ctx, id, |s| match &games_out {
                    Some(Ok(g)) => game_values(kind, &g.tournaments, &ids[s]),
                    Some(Err(e)) => Err(Error::InsufficientData(e.clone())),
                    None => Err(Error::Config("interaction not selected".into())),
                })
            }
        };
        metrics.push(m);
    }

    let mut skips = Vec::new();
    for m in metrics.iter().filter(|m| m.status != MetricStatus::Reported) {
        skips.push(SkipNote {
            metric_id: m.metric_id.clone(),
            reason: m.reason.clone().unwrap_or_default(),
            assumption: ctx.ledger.failed_for(&m.metric_id).map(|e| e.id.clone()),
        });
    }

    // Phase 4: aggregation and risk
    let aggregation = aggregate_section(cfg, &metrics);
    let risk = match &aggregation {
        Section::Reported(a) => risk_section(&metrics, &a.profiles, &ids[baseline]),
        Section::Skipped { reason } => Section::Skipped { reason: reason.clone() },
        Section::NotSelected => Section::NotSelected,
    };

    let audit = audit(&selected, &metrics);
    let mut per_system = BTreeMap::new();
    for t in &trials {
        *per_system.entry(t.trial.system_id.clone()).or_insert(0) += 1;
    }
    let (games, tournaments) = match games_out {
        None => (Section::NotSelected, Vec::new()),
        Some(Err(reason)) => (Section::Skipped { reason }, Vec::new()),
        Some(Ok(g)) => (Section::Reported(g.section), g.tournaments),
    };
    let bundle = ReportBundle {
        tool: TOOL_NAME.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        run_name: cfg.run.name.clone(),
        config_digest: config_digest(cfg)?,
        baseline: ids[baseline].clone(),
        systems: systems
            .iter()
            .map(|s| SystemSummary {
                id: s.id.clone(),
                kind: s.kind.name().into(),
                deterministic: s.deterministic,
                provenance_tags: s.provenance_tags.clone(),
            })
            .collect(),
        dimensions: Dimension::ALL
            .iter()
            .map(|d| (d.as_str().to_string(), if cfg.selected(*d) { "selected" } else { "not selected" }.to_string()))
            .collect(),
        seeds: Seeds {
            run: cfg.run.seed,
            repeat_seeds: (0..if cfg.selected(Dimension::Predictability) { cfg.predictability.repeats } else { 1 })
                .map(|r| repeat_seed(cfg.run.seed, r))
                .collect(),
            game_seeds: if cfg.selected(Dimension::Interaction) {
                (0..cfg.interaction.games.len()).map(|gi| game_seed(cfg.run.seed, gi)).collect()
            } else {
                Vec::new()
            },
            bootstrap_seed: mix(&[cfg.run.seed, stable_hash("bootstrap")]),
        },
        ledger: RunLedger {
            assumptions: ctx.ledger.entries().to_vec(),
            skips,
            notes,
        },
        judges,
        trials: TrialStats {
            total: trials.len(),
            failed: failures.len(),
            per_system,
        },
        metrics,
        audit,
        hotlist: match hot {
            Ok(h) => Section::Reported(h),
            Err(e) => Section::Skipped { reason: e.to_string() },
        },
        calibration,
        games,
        aggregation,
        risk,
    };
    drop(ctx);
    Ok(RunOutput {
        bundle,
        trials,
        failures,
        tournaments,
    })
}

fn topics_for(h: &Hotlist, dataset: &[InputRecord]) -> Vec<String> {
    h.items
        .iter()
        .filter_map(|i| dataset.iter().find(|r| r.input_id == i.input_id).map(|r| r.payload.clone()))
        .collect()
}

fn weight_grid(
    base: &BTreeMap<String, f64>,
    metrics: &[&MetricResult],
) -> Vec<BTreeMap<String, f64>> {
    let mut grid = vec![base.clone()];
    let uniform: BTreeMap<String, f64> = base.keys().map(|k| (k.clone(), 1.0)).collect();
    grid.push(uniform.clone());
    for d in Dimension::ALL {
        let inside: Vec<&str> = metrics.iter().filter(|m| m.dimension == d).map(|m| m.metric_id.as_str()).collect();
        if !inside.is_empty() && inside.len() < metrics.len() {
            let mut w = uniform.clone();
            for m in inside {
                w.insert(m.to_string(), 3.0);
            }
            grid.push(w);
        }
    }
    if metrics.len() > 1 {
        for m in metrics {
            let mut w = uniform.clone();
            w.insert(m.metric_id.clone(), 0.0);
            grid.push(w);
        }
    }
    let mut unique: Vec<BTreeMap<String, f64>> = Vec::new();
    for w in grid {
        if !unique.contains(&w) {
            unique.push(w);
        }
    }
    unique
}

fn composite(profile: &BTreeMap<String, f64>, weights: &BTreeMap<String, f64>, keep: impl Fn(&str) -> bool) -> Result<f64> {
    let scores: Vec<DirectionalScore> = profile
        .iter()
        .filter(|(m, _)| keep(m))
        .map(|(m, v)| DirectionalScore {
            metric_id: m.clone(),
            value: *v,
            orientation: catalog::Orientation::HigherBetter,
        })
        .collect();
    weighted_aggregate(&scores, weights)
}

fn aggregate_section(cfg: &RunConfig, metrics: &[MetricResult]) -> Section<AggregationSection> {
    let reported: Vec<&MetricResult> = metrics.iter().filter(|m| m.status == MetricStatus::Reported).collect();
    if reported.is_empty() {
        return Section::Skipped { reason: "no metric was reported".into() };
    }
    let build = || -> Result<AggregationSection> {
        let weights: BTreeMap<String, f64> = reported
            .iter()
            .map(|m| (m.metric_id.clone(), cfg.aggregate.weights.get(&m.metric_id).copied().unwrap_or(1.0)))
            .collect();
        let mut profiles: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for m in &reported {
            for (sys, v) in &m.directional {
                profiles.entry(sys.clone()).or_default().insert(m.metric_id.clone(), *v);
            }
        }
        let mut composites = BTreeMap::new();
        for (sys, p) in &profiles {
            composites.insert(sys.clone(), composite(p, &weights, |_| true)?);
        }
        let mut by_dim = BTreeMap::new();
        for d in Dimension::ALL {
            let dim_ids: BTreeSet<&str> = reported.iter().filter(|m| m.dimension == d).map(|m| m.metric_id.as_str()).collect();
            if dim_ids.is_empty() {
                continue;
            }
            let mut per = BTreeMap::new();
            for (sys, p) in &profiles {
                if let Ok(c) = composite(p, &weights, |m| dim_ids.contains(m)) {
                    per.insert(sys.clone(), c);
                }
            }
            by_dim.insert(d.as_str().to_string(), per);
        }
        let dominance = pareto_order(&profiles)?;
        let sensitivity = sensitivity_analysis(&profiles, &weight_grid(&weights, &reported))?;
        Ok(AggregationSection {
            weights,
            profiles,
            composites,
            composites_by_dimension: by_dim,
            dominance,
            sensitivity,
        })
    };
    match build() {
        Ok(a) => Section::Reported(a),
        Err(e) => Section::Skipped { reason: e.to_string() },
    }
}

fn risk_section(
    metrics: &[MetricResult],
    profiles: &BTreeMap<String, BTreeMap<String, f64>>,
    baseline: &str,
) -> Section<RiskSection> {
    let build = || -> Result<RiskSection> {
        let risk_of: BTreeMap<&str, &str> = metrics
            .iter()
            .filter(|m| m.status == MetricStatus::Reported)
            .map(|m| (m.metric_id.as_str(), m.risk_dimension.as_str()))
            .collect();
        let mut out = BTreeMap::new();
        for (sys, p) in profiles {
            let mut by_dim: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
            for (m, v) in p {
                by_dim.entry(risk_of[m.as_str()]).or_default().push(1.0 - v);
            }
            let prof = RiskProfile::from_pairs(by_dim.into_iter().map(|(d, v)| (d, stats::mean(&v).unwrap_or(0.0))))?;
            out.insert(sys.clone(), prof);
        }
        let base = out.get(baseline).cloned().ok_or_else(|| Error::InsufficientData("baseline has no profile".into()))?;
        let mut deltas = BTreeMap::new();
        for (sys, p) in out.iter().filter(|(s, _)| s.as_str() != baseline) {
            deltas.insert(sys.clone(), marginal_risk(p, &base)?);
        }
        Ok(RiskSection { profiles: out, deltas })
    };
    match build() {
        Ok(r) => Section::Reported(r),
        Err(e) => Section::Skipped { reason: e.to_string() },
    }
}

fn audit(selected: &[String], metrics: &[MetricResult]) -> Audit {
    let mut totals = AuditCounts::default();
    let mut per_dimension: BTreeMap<String, AuditCounts> = BTreeMap::new();
    for id in selected {
        let m = metrics.iter().find(|m| &m.metric_id == id);
        let dim = catalog::lookup(id).map_or("unknown", |s| s.dimension.as_str());
        let c = per_dimension.entry(dim.to_string()).or_default();
        for counts in [&mut totals, c] {
            counts.selected += 1;
            match m.map(|m| m.status) {
                Some(MetricStatus::Reported) => counts.reported += 1,
                Some(MetricStatus::Excluded) => {
                    counts.skipped += 1;
                    counts.excluded += 1;
                }
                Some(MetricStatus::Skipped) => counts.skipped += 1,
                None => {}
            }
        }
    }
    let balanced = |c: &AuditCounts| c.selected == c.reported + c.skipped;
    let reasons = metrics
        .iter()
        .filter(|m| m.status != MetricStatus::Reported)
        .all(|m| m.reason.as_ref().is_some_and(|r| !r.is_empty()));
    let same_set = metrics.len() == selected.len() && metrics.iter().zip(selected).all(|(m, s)| &m.metric_id == s);
    Audit {
        selected: selected.to_vec(),
        reconciled: balanced(&totals) && per_dimension.values().all(balanced) && reasons && same_set,
        totals,
        per_dimension,
    }
}

/// Writes the report, trials and match transcripts under `dir`.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<()> {
    emit_report(&out.bundle, Format::Machine, dir)?;
    emit_report(&out.bundle, Format::Human, dir)?;
    let tdir = dir.join("trials");
    fs::create_dir_all(&tdir).map_err(|e| Error::io(&tdir, e))?;
    write_trials(&tdir.join("trials.csv"), &out.trials)?;
    if !out.failures.is_empty() {
        let p = tdir.join("failures.csv");
        let mut w = csv::Writer::from_path(&p).map_err(|e| Error::Ingestion(format!("{}: {e}", p.display())))?;
        for f in &out.failures {
            w.serialize(f).map_err(|e| Error::Ingestion(format!("{}: {e}", p.display())))?;
        }
        w.flush().map_err(|e| Error::io(&p, e))?;
    }
    write_matches(&out.tournaments, &out.bundle, dir)
}

pub fn write_matches(tournaments: &[(GameSpec, TournamentResult)], bundle: &ReportBundle, dir: &Path) -> Result<()> {
    if tournaments.is_empty() {
        return Ok(());
    }
    let mdir = dir.join("matches");
    for (spec, t) in tournaments {
        let gdir = mdir.join(spec.kind.as_str());
        for m in &t.matches {
            crate::games::write_match(&gdir, m)?;
        }
    }
    if let Some(g) = bundle.games.reported() {
        g.combined.write_csv(&mdir)?;
    }
    Ok(())
}

fn write_trials(path: &Path, trials: &[TaggedTrial]) -> Result<()> {
    let err = |e: csv::Error| Error::Ingestion(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record([
        "trial_id", "system_id", "input_id", "variant_id", "purpose", "controls", "seed", "output", "confidence",
        "abstained", "latency_ms", "log_score",
    ])
    .map_err(err)?;
    for t in trials {
        let tr = &t.trial;
        let controls: Vec<String> = tr.controls.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let output = match &tr.output {
            Output::Number(v) => format!("{v}"),
            Output::Text(s) => s.clone(),
        };
        let opt = |v: Option<f64>| v.map(|v| format!("{v}")).unwrap_or_default();
        w.write_record([
            tr.trial_id.clone(),
            tr.system_id.clone(),
            tr.input_id.clone(),
            tr.variant_id.to_string(),
            t.purpose.name().to_string(),
            controls.join(";"),
            tr.seed.to_string(),
            output,
            opt(tr.confidence),
            tr.abstained.to_string(),
            format!("{}", tr.latency_ms),
            opt(tr.log_score),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Tournament-only run: trials for the hot-list, then every configured game.
pub fn run_games_only(cfg: &RunConfig) -> Result<(Hotlist, GamesOutput)> {
    cfg.validate()?;
    let systems = cfg.build_systems()?;
    let dataset = load_dataset(&cfg.resolve(&cfg.dataset.path))?;
    let pool = thread_pool(cfg.run.workers)?;
    let seed = repeat_seed(cfg.run.seed, 0);
    let trials: Vec<Trial> = pool.install(|| {
        dataset
            .par_iter()
            .flat_map_iter(|input| systems.iter().filter_map(move |s| s.invoke(input, &Controls::new(), seed).ok()))
            .collect()
    });
    let hot = divergence_hotlist(&trials, cfg.predictability.judge, cfg.interaction.hotlist_k)?;
    let topics = topics_for(&hot, &dataset);
    let games = pool.install(|| play_games(cfg, &systems, &topics))?;
    Ok((hot, games))
}
