//! Run configuration (TOML). Unknown keys are rejected at every level.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adapters::{
    noisy_system, replay_from_table, ScriptTable, SubprocessAdapter, SystemHandle,
};
use crate::aggregate::{DEFAULT_LEVEL, DEFAULT_RESAMPLES};
use crate::assumptions::ProvenanceRelation;
use crate::capability::{WeightedRubric, DEFAULT_AGREEMENT_TOLERANCE, DEFAULT_TRIGGER_THRESHOLD};
use crate::catalog::{self, Dimension};
use crate::error::{Error, Result};
use crate::games::{GameKind, GameSpec, Persona};
use crate::perturb::{VariantKind, VariantSpec};
use crate::predictability::{DEFAULT_COVERAGES, DEFAULT_REPEATS};
use crate::similarity::{Output, SimilarityKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub dataset: DatasetSection,
    pub systems: Vec<SystemConfig>,
    #[serde(default)]
    pub provenance: Vec<ProvenanceRelation>,
    #[serde(default)]
    pub rubric: Option<WeightedRubric>,
    #[serde(default)]
    pub predictability: PredictabilityConfig,
    #[serde(default)]
    pub capability: CapabilityConfig,
    #[serde(default)]
    pub interaction: InteractionConfig,
    #[serde(default)]
    pub aggregate: AggregateConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub name: String,
    pub baseline: String,
    pub dimensions: Vec<Dimension>,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads for trial generation and matches; 0 = one per core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub path: PathBuf,
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKindConfig {
    Scripted,
    NoisyScripted,
    ReplayLog,
    Subprocess,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub id: String,
    pub kind: SystemKindConfig,
    /// Table file for scripted, noisy and replay kinds.
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Command template for subprocess kinds; `{system_id}` is substituted.
    #[serde(default)]
    pub command: Option<Vec<String>>,
    #[serde(default = "one")]
    pub max_children: usize,
    /// Overrides the kind's default determinism declaration.
    #[serde(default)]
    pub deterministic: Option<bool>,
    #[serde(default)]
    pub flip_prob: f64,
    #[serde(default)]
    pub alt_outputs: Vec<Output>,
    #[serde(default)]
    pub seed_salt: u64,
    #[serde(default)]
    pub provenance_tags: Vec<String>,
    #[serde(default)]
    pub persona: Option<Persona>,
    #[serde(default)]
    pub control_slopes: BTreeMap<String, f64>,
    #[serde(default)]
    pub control_ranges: BTreeMap<String, [f64; 2]>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlProbe {
    pub name: String,
    pub values: Vec<f64>,
    /// Admissible output range for adherence.
    #[serde(default)]
    pub bounds: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictabilityConfig {
    /// Subset of predictability metrics; all when absent.
    #[serde(default)]
    pub metrics: Option<Vec<String>>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_judge")]
    pub judge: SimilarityKind,
    /// Meaning-preserving variants for input stability.
    #[serde(default = "default_variants")]
    pub variants: Vec<VariantSpec>,
    /// Ambiguity-injecting variants for uncertainty governance.
    #[serde(default = "default_ambiguity")]
    pub ambiguity: Vec<VariantSpec>,
    #[serde(default)]
    pub control: Option<ControlProbe>,
    #[serde(default = "default_coverages")]
    pub coverages: Vec<f64>,
    /// Numeric outputs at or above this value are labelled `accept`, others
    /// `reject`, wherever labels are needed.
    #[serde(default)]
    pub label_threshold: Option<f64>,
}

fn default_repeats() -> usize {
    DEFAULT_REPEATS
}
fn default_judge() -> SimilarityKind {
    SimilarityKind::ExactLabel
}
fn default_variants() -> Vec<VariantSpec> {
    vec![
        VariantSpec::new(VariantKind::OrderShuffle, 3, 1),
        VariantSpec::new(VariantKind::Redaction { fraction: 0.1 }, 3, 2),
    ]
}
fn default_ambiguity() -> Vec<VariantSpec> {
    vec![
        VariantSpec::new(VariantKind::NoiseInjection { rate: 0.2 }, 2, 3),
        VariantSpec::new(VariantKind::NoiseInjection { rate: 0.5 }, 2, 4),
    ]
}
fn default_coverages() -> Vec<f64> {
    DEFAULT_COVERAGES.to_vec()
}

impl Default for PredictabilityConfig {
    fn default() -> Self {
        Self {
            metrics: None,
            repeats: DEFAULT_REPEATS,
            judge: default_judge(),
            variants: default_variants(),
            ambiguity: default_ambiguity(),
            control: None,
            coverages: default_coverages(),
            label_threshold: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapabilityConfig {
    #[serde(default)]
    pub metrics: Option<Vec<String>>,
    #[serde(default = "default_trigger")]
    pub trigger_threshold: f64,
    #[serde(default = "default_tolerance")]
    pub agreement_tolerance: f64,
    /// Quantile-map each system's scores onto the baseline's before agreement
    /// and trigger comparisons.
    #[serde(default)]
    pub calibrate: bool,
    /// Numeric outputs at or above this are positive decisions.
    #[serde(default = "default_accept")]
    pub accept_threshold: f64,
    /// Text outputs equal to this label are positive decisions.
    #[serde(default = "default_positive")]
    pub positive_label: String,
    #[serde(default)]
    pub benchmarks: Option<PathBuf>,
}

fn default_trigger() -> f64 {
    DEFAULT_TRIGGER_THRESHOLD
}
fn default_tolerance() -> f64 {
    DEFAULT_AGREEMENT_TOLERANCE
}
fn default_accept() -> f64 {
    3.0
}
fn default_positive() -> String {
    "accept".into()
}

impl Default for CapabilityConfig {
    fn default() -> Self {
        Self {
            metrics: None,
            trigger_threshold: DEFAULT_TRIGGER_THRESHOLD,
            agreement_tolerance: DEFAULT_AGREEMENT_TOLERANCE,
            calibrate: false,
            accept_threshold: default_accept(),
            positive_label: default_positive(),
            benchmarks: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionConfig {
    #[serde(default = "default_games")]
    pub games: Vec<GameSpec>,
    #[serde(default = "default_matches")]
    pub matches_per_pair: u32,
    /// Number of most-divergent inputs used as game topics.
    #[serde(default = "default_hotlist")]
    pub hotlist_k: usize,
}

fn default_games() -> Vec<GameSpec> {
    GameKind::ALL.into_iter().map(GameSpec::new).collect()
}
fn default_matches() -> u32 {
    4
}
fn default_hotlist() -> usize {
    5
}

impl Default for InteractionConfig {
    fn default() -> Self {
        Self {
            games: default_games(),
            matches_per_pair: default_matches(),
            hotlist_k: default_hotlist(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregateConfig {
    /// Metric id → weight; unlisted metrics weigh 1.
    #[serde(default)]
    pub weights: BTreeMap<String, f64>,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    #[serde(default = "default_level")]
    pub level: f64,
}

fn default_resamples() -> usize {
    DEFAULT_RESAMPLES
}
fn default_level() -> f64 {
    DEFAULT_LEVEL
}

impl Default for AggregateConfig {
    fn default() -> Self {
        Self {
            weights: BTreeMap::new(),
            bootstrap_resamples: DEFAULT_RESAMPLES,
            level: DEFAULT_LEVEL,
        }
    }
}

pub fn game_metric(kind: GameKind) -> &'static str {
    match kind {
        GameKind::Persuasion => catalog::PERSUASION,
        GameKind::PredictionSurprise => catalog::PREDICTION_SURPRISE,
        GameKind::CompressionReconstruction => catalog::COMPRESSION_RECONSTRUCTION,
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        // an unreadable config is a configuration error, not a data error
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        match &self.run.out {
            Some(p) => self.resolve(p),
            None => self.base_dir.join("out").join(&self.run.name),
        }
    }

    pub fn selected(&self, d: Dimension) -> bool {
        self.run.dimensions.contains(&d)
    }

    pub fn system_ids(&self) -> Vec<String> {
        self.systems.iter().map(|s| s.id.clone()).collect()
    }

    /// Metric ids the run must account for, in catalog order; `benchmarks` are
    /// the benchmark names found in the benchmark file.
    pub fn selected_metrics(&self, benchmarks: &[String]) -> Vec<String> {
        let mut out = Vec::new();
        if self.selected(Dimension::Predictability) {
            out.extend(pick(Dimension::Predictability, &self.predictability.metrics));
        }
        if self.selected(Dimension::Capability) {
            let base = pick(Dimension::Capability, &self.capability.metrics);
            out.extend(base);
            let wanted = |id: &str| self.capability.metrics.as_ref().is_none_or(|m| m.iter().any(|x| x == id));
            out.extend(
                benchmarks
                    .iter()
                    .map(|b| format!("{}{b}", catalog::BENCHMARK_PREFIX))
                    .filter(|id| wanted(id)),
            );
        }
        if self.selected(Dimension::Interaction) {
            let mut seen = BTreeSet::new();
            for g in &self.interaction.games {
                if seen.insert(g.kind) {
                    out.push(game_metric(g.kind).to_string());
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        if self.run.name.trim().is_empty() || self.run.name.contains(['/', '\\']) {
            return cfg_err(format!("run name `{}` must be a non-empty plain name", self.run.name));
        }
        if self.run.dimensions.is_empty() {
            return cfg_err("select at least one dimension".into());
        }
        let ids = self.system_ids();
        let unique: BTreeSet<&String> = ids.iter().collect();
        if unique.len() != ids.len() {
            return cfg_err("system ids must be unique".into());
        }
        if ids.len() < 2 {
            return cfg_err("a comparison needs at least two systems".into());
        }
        if !ids.contains(&self.run.baseline) {
            return cfg_err(format!("baseline `{}` is not a configured system", self.run.baseline));
        }
        for r in &self.provenance {
            for s in [&r.a, &r.b] {
                if !ids.contains(s) {
                    return cfg_err(format!("provenance relation names unknown system `{s}`"));
                }
            }
        }
        for s in &self.systems {
            s.validate()?;
        }
        for (dim, list) in [
            (Dimension::Predictability, &self.predictability.metrics),
            (Dimension::Capability, &self.capability.metrics),
        ] {
            for m in list.iter().flatten() {
                let ok = catalog::lookup(m).is_some_and(|spec| spec.dimension == dim);
                if !ok {
                    return cfg_err(format!("`{m}` is not a {} metric", dim.as_str()));
                }
            }
        }
        let p = &self.predictability;
        if p.repeats < 2 {
            return cfg_err(format!("predictability repeats must be at least 2, got {}", p.repeats));
        }
        for v in &p.variants {
            v.validate()?;
            if !v.kind.preserves_semantics() {
                return cfg_err(format!(
                    "`{}` variants do not preserve meaning; list them under `ambiguity`",
                    v.kind.name()
                ));
            }
            if matches!(v.kind, VariantKind::SynonymSubstitution) && self.dataset.lexicon.is_none() {
                return cfg_err("synonym substitution needs `dataset.lexicon`".into());
            }
        }
        for v in &p.ambiguity {
            v.validate()?;
            if matches!(v.kind, VariantKind::SynonymSubstitution) && self.dataset.lexicon.is_none() {
                return cfg_err("synonym substitution needs `dataset.lexicon`".into());
            }
        }
        if let Some(c) = &p.control {
            let distinct: BTreeSet<u64> = c.values.iter().map(|v| v.to_bits()).collect();
            if distinct.len() < 3 || c.values.iter().any(|v| !v.is_finite()) {
                return cfg_err(format!("control `{}` needs at least 3 distinct finite values", c.name));
            }
            if let Some([lo, hi]) = c.bounds {
                if !(lo < hi) {
                    return cfg_err(format!("control bounds [{lo}, {hi}] need lo < hi"));
                }
            }
        }
        if p.coverages.is_empty() || p.coverages.iter().any(|c| !(*c > 0.0 && *c <= 1.0)) {
            return cfg_err("coverages must be non-empty and lie in (0, 1]".into());
        }
        let c = &self.capability;
        if !(c.trigger_threshold > 0.0) {
            return cfg_err(format!("trigger threshold must be positive, got {}", c.trigger_threshold));
        }
        if !(c.agreement_tolerance >= 0.0) {
            return cfg_err(format!("agreement tolerance must be ≥ 0, got {}", c.agreement_tolerance));
        }
        let i = &self.interaction;
        if self.selected(Dimension::Interaction) && i.games.is_empty() {
            return cfg_err("interaction is selected but no games are configured".into());
        }
        for g in &i.games {
            g.validate()?;
        }
        if i.matches_per_pair == 0 {
            return cfg_err("matches per pair must be at least 1".into());
        }
        if i.hotlist_k == 0 {
            return cfg_err("hot-list size must be at least 1".into());
        }
        let a = &self.aggregate;
        if a.bootstrap_resamples == 0 {
            return cfg_err("bootstrap resamples must be at least 1".into());
        }
        if !(a.level > 0.0 && a.level < 1.0) {
            return cfg_err(format!("confidence level must be in (0, 1), got {}", a.level));
        }
        for (m, w) in &a.weights {
            if catalog::lookup(m).is_none() {
                return cfg_err(format!("weight given for unknown metric `{m}`"));
            }
            if !(*w >= 0.0 && w.is_finite()) {
                return cfg_err(format!("weight for `{m}` must be ≥ 0, got {w}"));
            }
        }
        Ok(())
    }

    /// Constructs every configured system, reading table files.
    pub fn build_systems(&self) -> Result<Vec<SystemHandle>> {
        self.systems.iter().map(|s| s.build(self)).collect()
    }
}

fn pick(dim: Dimension, subset: &Option<Vec<String>>) -> Vec<String> {
    catalog::ids_for(dim)
        .filter(|id| subset.as_ref().is_none_or(|m| m.iter().any(|x| x == id)))
        .map(String::from)
        .collect()
}

impl SystemConfig {
    fn validate(&self) -> Result<()> {
        let needs_path = !matches!(self.kind, SystemKindConfig::Subprocess);
        if needs_path && self.path.is_none() {
            return Err(Error::Config(format!("system `{}` needs a table `path`", self.id)));
        }
        if !needs_path && self.command.as_ref().is_none_or(|c| c.is_empty()) {
            return Err(Error::Config(format!("subprocess system `{}` needs a `command`", self.id)));
        }
        if self.kind != SystemKindConfig::NoisyScripted && (self.flip_prob != 0.0 || !self.alt_outputs.is_empty()) {
            return Err(Error::Config(format!(
                "`flip_prob` and `alt_outputs` only apply to noisy-scripted systems (`{}`)",
                self.id
            )));
        }
        if let Some(p) = &self.persona {
            p.validate()?;
        }
        for (name, [lo, hi]) in &self.control_ranges {
            if !(lo <= hi) {
                return Err(Error::Config(format!("control range `{name}` of `{}` has lo > hi", self.id)));
            }
        }
        Ok(())
    }

    fn build(&self, cfg: &RunConfig) -> Result<SystemHandle> {
        let table = |cfg: &RunConfig| -> Result<ScriptTable> {
            let p = cfg.resolve(self.path.as_deref().unwrap_or(Path::new("")));
            let mut t = ScriptTable::from_csv(&p, cfg.rubric.as_ref())?;
            t.control_slopes = self.control_slopes.clone();
            Ok(t)
        };
        let mut h = match self.kind {
            SystemKindConfig::Scripted => SystemHandle::scripted(&self.id, table(cfg)?),
            SystemKindConfig::NoisyScripted => {
                noisy_system(&self.id, table(cfg)?, self.flip_prob, self.alt_outputs.clone(), self.seed_salt)?
            }
            SystemKindConfig::ReplayLog => replay_from_table(&self.id, table(cfg)?),
            SystemKindConfig::Subprocess => {
                let adapter = SubprocessAdapter::new(self.command.clone().unwrap_or_default(), self.max_children)?;
                SystemHandle::subprocess(&self.id, adapter)
            }
        };
        if let Some(d) = self.deterministic {
            h.deterministic = d;
        }
        h.provenance_tags = self.provenance_tags.clone();
        h.persona = self.persona.clone();
        h.control_ranges = self.control_ranges.iter().map(|(k, [lo, hi])| (k.clone(), (*lo, *hi))).collect();
        Ok(h)
    }
}
