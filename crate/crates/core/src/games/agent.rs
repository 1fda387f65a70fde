use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::Serialize;

use super::scoring::novelty;
use super::{GameKind, Persona, Role, TurnRequest, TurnResponse};
use crate::adapters::{SystemHandle, SystemKind};
use crate::error::{Error, Result};
use crate::rng::rng_for;
use crate::similarity::{tokens, SimilarityKind};

/// Persona used by mock systems without an explicit one: the table's distinct
/// output labels serve as both moves and arguments.
pub fn default_persona(system: &SystemHandle) -> Option<Persona> {
    let table = system.table()?;
    let labels: BTreeSet<String> = table
        .entries()
        .values()
        .map(|e| e.output.label())
        .filter(|l| !l.is_empty())
        .collect();
    let labels: Vec<String> = if labels.is_empty() { vec!["pass".into()] } else { labels.into_iter().collect() };
    let mut p = Persona::new(labels.clone(), labels);
    p.randomized = matches!(system.kind, SystemKind::NoisyScripted(_));
    Some(p)
}

#[derive(Serialize)]
struct TurnEnvelope<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    #[serde(flatten)]
    turn: &'a TurnRequest,
}

/// Asks `system` for its next move.
pub fn play_turn(system: &SystemHandle, req: &TurnRequest) -> Result<TurnResponse> {
    let resp = match &system.kind {
        SystemKind::Subprocess(adapter) => adapter.call(&system.id, &TurnEnvelope { kind: "turn", turn: req })?,
        SystemKind::Custom(responder) => responder.play_turn(req)?,
        _ => {
            let persona = match &system.persona {
                Some(p) => p.clone(),
                None => default_persona(system).ok_or_else(|| {
                    Error::Config(format!("system `{}` has no game persona", system.id))
                })?,
            };
            persona_turn(&persona, req)?
        }
    };
    if let Some(b) = resp.belief {
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::Adapter {
                system: system.id.clone(),
                status: None,
                diagnostics: format!("belief {b} outside [0, 1]"),
            });
        }
    }
    Ok(resp)
}

fn pick<'a>(items: &'a [String], randomized: bool, counter: usize, rng: &mut impl Rng) -> &'a String {
    if randomized {
        &items[rng.gen_range(0..items.len())]
    } else {
        &items[counter % items.len()]
    }
}

/// Deterministic mock behaviour; randomness comes only from `req.seed`.
pub(crate) fn persona_turn(p: &Persona, req: &TurnRequest) -> Result<TurnResponse> {
    p.validate()?;
    let mut rng = rng_for(&[req.seed]);
    let own = req.history.iter().filter(|t| t.actor == req.self_id).count();
    let move_label = pick(&p.moves, p.randomized, own, &mut rng).clone();
    let argument = pick(&p.arguments, p.randomized, own, &mut rng).clone();
    let mut resp = TurnResponse {
        move_label,
        argument,
        belief: None,
        prediction: None,
        compression: None,
        reconstruction: None,
    };
    match req.game {
        GameKind::Persuasion => resp.belief = Some(persona_belief(p, req)?),
        GameKind::PredictionSurprise => {
            // most frequent opponent move so far; ties to the smallest label
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for t in req.history.iter().filter(|t| t.actor == req.opponent_id) {
                *counts.entry(&t.move_label).or_default() += 1;
            }
            let guess = counts
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
                .map(|(l, _)| l.to_string())
                .unwrap_or_else(|| resp.move_label.clone());
            resp.prediction = Some(guess);
        }
        GameKind::CompressionReconstruction => match req.role {
            Role::Compressor => {
                let original = req.original.as_deref().unwrap_or("");
                let toks = tokens(original);
                let keep = ((p.keep_fraction * toks.len() as f64).ceil() as usize).clamp(1, toks.len().max(1));
                resp.compression = Some(toks.into_iter().take(keep).collect::<Vec<_>>().join(" "));
            }
            Role::Reconstructor => resp.reconstruction = Some(req.compression.clone().unwrap_or_default()),
            Role::Debater => {}
        },
    }
    Ok(resp)
}

/// Moves the previous belief toward the opponent's last stated belief by
/// `susceptibility × novelty` of the opponent's last argument.
fn persona_belief(p: &Persona, req: &TurnRequest) -> Result<f64> {
    let prev = req
        .history
        .iter()
        .rev()
        .find(|t| t.actor == req.self_id)
        .and_then(|t| t.belief)
        .unwrap_or(p.stance);
    let Some(k) = req.history.iter().rposition(|t| t.actor == req.opponent_id) else {
        return Ok(prev);
    };
    let opp = &req.history[k];
    let Some(target) = opp.belief else {
        return Ok(prev);
    };
    let earlier: Vec<&str> = req.history[..k].iter().map(|t| t.argument.as_str()).collect();
    let nov = novelty(&earlier, &opp.argument, SimilarityKind::TokenJaccard)?;
    Ok((prev + p.susceptibility * nov * (target - prev)).clamp(0.0, 1.0))
}
