//! Uniform invocation of systems under test.
//!
//! Every adapter turns an [`InputRecord`] plus control settings and a seed into
//! a [`Trial`]. Scripted, noisy and replay adapters are pure functions of their
//! arguments, so trials produced in parallel are identical to serial ones.

mod subprocess;
mod table;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use subprocess::SubprocessAdapter;
pub use table::{ScriptEntry, ScriptTable};

use crate::error::{Error, Result};
use crate::games::{Persona, TurnRequest, TurnResponse};
use crate::rng::{rng_for, stable_hash};
use crate::similarity::Output;

pub type Controls = BTreeMap<String, f64>;

/// One dataset item, or a perturbed variant of one (`variant_id > 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub input_id: String,
    #[serde(default)]
    pub variant_id: u32,
    pub payload: String,
    #[serde(default)]
    pub group: Option<String>,
    #[serde(default)]
    pub criteria: BTreeMap<String, f64>,
}

impl InputRecord {
    pub fn new(input_id: impl Into<String>, payload: impl Into<String>) -> Self {
        Self {
            input_id: input_id.into(),
            variant_id: 0,
            payload: payload.into(),
            group: None,
            criteria: BTreeMap::new(),
        }
    }

    pub fn variant(&self, variant_id: u32, payload: impl Into<String>) -> Self {
        Self {
            variant_id,
            payload: payload.into(),
            ..self.clone()
        }
    }
}

/// One invocation record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub trial_id: String,
    pub system_id: String,
    pub input_id: String,
    pub variant_id: u32,
    pub controls: Controls,
    pub seed: u64,
    pub output: Output,
    pub confidence: Option<f64>,
    pub abstained: bool,
    pub latency_ms: f64,
    pub log_score: Option<f64>,
}

impl Trial {
    pub fn trial_id(system: &str, input: &str, variant: u32, seed: u64, controls: &Controls) -> String {
        let mut id = format!("{system}/{input}/v{variant}/s{seed}");
        if !controls.is_empty() {
            let c: Vec<String> = controls.iter().map(|(k, v)| format!("{k}={v}")).collect();
            id.push_str("/c:");
            id.push_str(&c.join(","));
        }
        id
    }
}

/// Wire request for subprocess and custom adapters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Request {
    #[serde(rename = "type")]
    pub kind: String,
    pub input_id: String,
    pub variant_id: u32,
    pub payload: String,
    pub controls: Controls,
    pub seed: u64,
}

/// Wire response: `{"output": ..., "confidence": 0.8, "abstain": false}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Response {
    #[serde(default = "Output::empty")]
    pub output: Output,
    #[serde(default)]
    pub confidence: Option<f64>,
    #[serde(default)]
    pub abstain: bool,
    #[serde(default)]
    pub log_score: Option<f64>,
}

/// In-process extension point for systems that are neither mocks nor subprocesses.
pub trait Responder: Send + Sync {
    fn respond(&self, request: &Request) -> Result<Response>;

    fn play_turn(&self, _turn: &TurnRequest) -> Result<TurnResponse> {
        Err(Error::Config("this responder does not play games".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyScript {
    pub table: ScriptTable,
    pub flip_prob: f64,
    pub alt_outputs: Vec<Output>,
    pub seed_salt: u64,
}

#[derive(Clone)]
pub enum SystemKind {
    Scripted(ScriptTable),
    NoisyScripted(NoisyScript),
    ReplayLog(ScriptTable),
    Subprocess(SubprocessAdapter),
    Custom(Arc<dyn Responder>),
}

impl SystemKind {
    pub fn name(&self) -> &'static str {
        match self {
            SystemKind::Scripted(_) => "scripted",
            SystemKind::NoisyScripted(_) => "noisy-scripted",
            SystemKind::ReplayLog(_) => "replay-log",
            SystemKind::Subprocess(_) => "subprocess",
            SystemKind::Custom(_) => "custom",
        }
    }
}

impl fmt::Debug for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct SystemHandle {
    pub id: String,
    pub kind: SystemKind,
    pub deterministic: bool,
    pub provenance_tags: Vec<String>,
    /// Game behaviour for mock kinds; derived from the table when absent.
    pub persona: Option<Persona>,
    /// Declared admissible range per control.
    pub control_ranges: BTreeMap<String, (f64, f64)>,
}

impl SystemHandle {
    fn with_kind(id: impl Into<String>, kind: SystemKind, deterministic: bool) -> Self {
        Self {
            id: id.into(),
            kind,
            deterministic,
            provenance_tags: Vec::new(),
            persona: None,
            control_ranges: BTreeMap::new(),
        }
    }

    pub fn scripted(id: impl Into<String>, table: ScriptTable) -> Self {
        Self::with_kind(id, SystemKind::Scripted(table), true)
    }

    pub fn subprocess(id: impl Into<String>, adapter: SubprocessAdapter) -> Self {
        Self::with_kind(id, SystemKind::Subprocess(adapter), false)
    }

    pub fn custom(id: impl Into<String>, responder: Arc<dyn Responder>, deterministic: bool) -> Self {
        Self::with_kind(id, SystemKind::Custom(responder), deterministic)
    }

    pub fn with_persona(mut self, persona: Persona) -> Self {
        self.persona = Some(persona);
        self
    }

    /// The underlying table for mock kinds.
    pub fn table(&self) -> Option<&ScriptTable> {
        match &self.kind {
            SystemKind::Scripted(t) | SystemKind::ReplayLog(t) => Some(t),
            SystemKind::NoisyScripted(n) => Some(&n.table),
            _ => None,
        }
    }

    pub fn accepts_controls(&self) -> bool {
        !matches!(self.kind, SystemKind::ReplayLog(_))
    }

    fn check_controls(&self, controls: &Controls) -> Result<()> {
        for (name, v) in controls {
            if let Some((lo, hi)) = self.control_ranges.get(name) {
                if v < lo || v > hi {
                    return Err(Error::Config(format!(
                        "control `{name}` = {v} is outside the declared range [{lo}, {hi}] of `{}`",
                        self.id
                    )));
                }
            }
        }
        Ok(())
    }

    fn lookup<'a>(&self, table: &'a ScriptTable, input: &InputRecord) -> Result<&'a ScriptEntry> {
        table.get(&input.input_id).ok_or_else(|| Error::UnknownInput {
            system: self.id.clone(),
            input: input.input_id.clone(),
        })
    }

    fn apply_slopes(table: &ScriptTable, output: Output, controls: &Controls) -> Output {
        match output {
            Output::Number(v) if !table.control_slopes.is_empty() => {
                let shift: f64 = table
                    .control_slopes
                    .iter()
                    .filter_map(|(k, slope)| controls.get(k).map(|c| slope * c))
                    .sum();
                Output::Number(v + shift)
            }
            other => other,
        }
    }

    /// Runs the system once.
    pub fn invoke(&self, input: &InputRecord, controls: &Controls, seed: u64) -> Result<Trial> {
        self.check_controls(controls)?;
        let mut trial = Trial {
            trial_id: Trial::trial_id(&self.id, &input.input_id, input.variant_id, seed, controls),
            system_id: self.id.clone(),
            input_id: input.input_id.clone(),
            variant_id: input.variant_id,
            controls: controls.clone(),
            seed,
            output: Output::empty(),
            confidence: None,
            abstained: false,
            latency_ms: 0.0,
            log_score: None,
        };
        match &self.kind {
            SystemKind::Scripted(table) => {
                let e = self.lookup(table, input)?;
                trial.output = Self::apply_slopes(table, e.output.clone(), controls);
                trial.confidence = e.confidence;
                trial.latency_ms = e.latency_ms;
            }
            SystemKind::NoisyScripted(noisy) => {
                let e = self.lookup(&noisy.table, input)?;
                let (output, flipped) = noisy_draw(noisy, &e.output, &input.input_id, seed);
                trial.output = Self::apply_slopes(&noisy.table, output, controls);
                // flipped answers report half the table confidence
                trial.confidence = e.confidence.map(|c| if flipped { c / 2.0 } else { c });
                trial.latency_ms = e.latency_ms;
            }
            SystemKind::ReplayLog(table) => match table.get(&input.input_id) {
                Some(e) => {
                    trial.output = e.output.clone();
                    trial.confidence = e.confidence;
                    trial.latency_ms = e.latency_ms;
                }
                None => trial.abstained = true,
            },
            SystemKind::Subprocess(adapter) => {
                let req = self.request(input, controls, seed);
                let started = Instant::now();
                let resp: Response = adapter.call(&self.id, &req)?;
                trial.latency_ms = started.elapsed().as_secs_f64() * 1000.0;
                self.fill(&mut trial, resp)?;
            }
            SystemKind::Custom(responder) => {
                let resp = responder.respond(&self.request(input, controls, seed))?;
                self.fill(&mut trial, resp)?;
            }
        }
        Ok(trial)
    }

    fn request(&self, input: &InputRecord, controls: &Controls, seed: u64) -> Request {
        Request {
            kind: "invoke".into(),
            input_id: input.input_id.clone(),
            variant_id: input.variant_id,
            payload: input.payload.clone(),
            controls: controls.clone(),
            seed,
        }
    }

    fn fill(&self, trial: &mut Trial, resp: Response) -> Result<()> {
        if let Some(c) = resp.confidence {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::Adapter {
                    system: self.id.clone(),
                    status: None,
                    diagnostics: format!("confidence {c} outside [0, 1]"),
                });
            }
        }
        trial.output = resp.output;
        trial.confidence = resp.confidence;
        trial.abstained = resp.abstain;
        trial.log_score = resp.log_score;
        Ok(())
    }
}

/// The noisy mock's draw for one (input, seed): `(output, flipped)`.
pub(crate) fn noisy_draw(noisy: &NoisyScript, base: &Output, input_id: &str, seed: u64) -> (Output, bool) {
    let mut rng = rng_for(&[noisy.seed_salt, stable_hash(input_id), seed]);
    let u: f64 = rng.gen();
    if u < noisy.flip_prob && !noisy.alt_outputs.is_empty() {
        let i = rng.gen_range(0..noisy.alt_outputs.len());
        (noisy.alt_outputs[i].clone(), true)
    } else {
        (base.clone(), false)
    }
}

/// A scripted system that replaces its table answer with a uniform draw from
/// `alt_outputs` with probability `flip_prob`.
pub fn noisy_system(
    id: impl Into<String>,
    table: ScriptTable,
    flip_prob: f64,
    alt_outputs: Vec<Output>,
    seed_salt: u64,
) -> Result<SystemHandle> {
    if !(0.0..=1.0).contains(&flip_prob) {
        return Err(Error::Config(format!(
            "flip probability {flip_prob} is outside [0, 1]"
        )));
    }
    if flip_prob > 0.0 && alt_outputs.is_empty() {
        return Err(Error::Config(
            "alternative outputs are required when flip probability is positive".into(),
        ));
    }
    Ok(SystemHandle::with_kind(
        id,
        SystemKind::NoisyScripted(NoisyScript {
            table,
            flip_prob,
            alt_outputs,
            seed_salt,
        }),
        flip_prob == 0.0,
    ))
}

/// A system that answers from a historical log and abstains on unlogged inputs.
pub fn replay_system(id: impl Into<String>, log: Vec<(String, Output, Option<f64>)>) -> Result<SystemHandle> {
    let table = ScriptTable::new(log.into_iter().map(|(id, output, confidence)| {
        (
            id,
            ScriptEntry {
                output,
                confidence,
                latency_ms: 0.0,
            },
        )
    }))?;
    Ok(replay_from_table(id, table))
}

pub fn replay_from_table(id: impl Into<String>, table: ScriptTable) -> SystemHandle {
    SystemHandle::with_kind(id, SystemKind::ReplayLog(table), true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ScriptTable {
        ScriptTable::from_outputs([("doc1", Output::Text("accept".into()))]).unwrap()
    }

    fn input(id: &str) -> InputRecord {
        InputRecord::new(id, "some text")
    }

    #[test]
    fn scripted_lookup_and_miss() {
        let s = SystemHandle::scripted("s", table());
        let t = s.invoke(&input("doc1"), &Controls::new(), 0).unwrap();
        assert_eq!(t.output, Output::Text("accept".into()));
        assert!(!t.abstained);
        assert!(matches!(
            s.invoke(&input("doc9"), &Controls::new(), 0),
            Err(Error::UnknownInput { .. })
        ));
    }

    #[test]
    fn noisy_same_seed_is_identical() {
        let s = noisy_system("n", table(), 0.3, vec![Output::Text("reject".into())], 7).unwrap();
        for seed in 0..50 {
            let a = s.invoke(&input("doc1"), &Controls::new(), seed).unwrap();
            let b = s.invoke(&input("doc1"), &Controls::new(), seed).unwrap();
            assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        }
    }

    #[test]
    fn noisy_degenerate_probabilities() {
        let zero = noisy_system("z", table(), 0.0, vec![], 1).unwrap();
        let one = noisy_system("o", table(), 1.0, vec![Output::Text("x".into())], 1).unwrap();
        for seed in 0..100 {
            assert_eq!(zero.invoke(&input("doc1"), &Controls::new(), seed).unwrap().output, Output::Text("accept".into()));
            assert_eq!(one.invoke(&input("doc1"), &Controls::new(), seed).unwrap().output, Output::Text("x".into()));
        }
    }

    #[test]
    fn noisy_flip_fraction_within_binomial_band() {
        // 200 Bernoulli(0.3) draws: 95% band is about ±1.96·sqrt(0.21/200) ≈ ±0.064.
        let s = noisy_system("n", table(), 0.3, vec![Output::Text("reject".into())], 11).unwrap();
        let flips = (0..200)
            .filter(|&seed| s.invoke(&input("doc1"), &Controls::new(), seed).unwrap().output != Output::Text("accept".into()))
            .count();
        let frac = flips as f64 / 200.0;
        assert!((frac - 0.3).abs() <= 0.07, "flip fraction {frac}");
    }

    #[test]
    fn noisy_config_errors() {
        assert!(matches!(noisy_system("n", table(), 1.5, vec![Output::empty()], 0), Err(Error::Config(_))));
        assert!(matches!(noisy_system("n", table(), 0.5, vec![], 0), Err(Error::Config(_))));
    }

    #[test]
    fn replay_answers_and_abstains() {
        let r = replay_system("h", vec![("d1".into(), Output::Number(4.2), None)]).unwrap();
        assert_eq!(r.invoke(&input("d1"), &Controls::new(), 0).unwrap().output, Output::Number(4.2));
        assert!(r.invoke(&input("d2"), &Controls::new(), 0).unwrap().abstained);
    }

    #[test]
    fn replay_rejects_duplicate_ids() {
        let log = vec![
            ("d1".to_string(), Output::Number(1.0), None),
            ("d1".to_string(), Output::Number(2.0), None),
        ];
        assert!(matches!(replay_system("h", log), Err(Error::Ingestion(_))));
    }

    #[test]
    fn control_range_is_enforced() {
        let mut s = SystemHandle::scripted("s", table());
        s.control_ranges.insert("temperature".into(), (0.0, 1.0));
        let c: Controls = [("temperature".to_string(), 2.0)].into();
        assert!(matches!(s.invoke(&input("doc1"), &c, 0), Err(Error::Config(_))));
    }

    #[test]
    fn slopes_shift_numeric_outputs() {
        let mut t = ScriptTable::from_outputs([("d", Output::Number(1.0))]).unwrap();
        t.control_slopes.insert("temperature".into(), 2.0);
        let s = SystemHandle::scripted("s", t);
        let c: Controls = [("temperature".to_string(), 0.5)].into();
        assert_eq!(s.invoke(&input("d"), &c, 0).unwrap().output, Output::Number(2.0));
    }
}
