use super::agent::play_turn;
use super::scoring::score_transcript;
use super::{GameKind, GameSpec, MatchResult, Role, Transcript, Turn, TurnRequest, Winner};
use crate::adapters::SystemHandle;
use crate::error::{Error, Result};
use crate::perturb::sentence_split;
use crate::rng::{mix, stable_hash};

/// Text to compress in leg-local round `r`; independent of who compresses.
fn original_for(topic: &str, seed: u64, r: u32) -> String {
    let units = sentence_split(topic);
    if units.is_empty() {
        return topic.to_string();
    }
    let offset = mix(&[seed, stable_hash(topic)]) as usize % units.len();
    units[(offset + r as usize) % units.len()].clone()
}

fn request(
    spec: &GameSpec,
    me: &SystemHandle,
    them: &SystemHandle,
    topic: &str,
    round: u32,
    role: Role,
    history: &[Turn],
    leg_seed: u64,
) -> TurnRequest {
    TurnRequest {
        game: spec.kind,
        round,
        role,
        self_id: me.id.clone(),
        opponent_id: them.id.clone(),
        topic: topic.to_string(),
        history: history.to_vec(),
        original: None,
        compression: None,
        budget: spec.budget,
        seed: mix(&[leg_seed, history.len() as u64, stable_hash(&me.id)]),
    }
}

fn record(round: u32, actor: &SystemHandle, r: super::TurnResponse, spec: &GameSpec) -> Result<Turn> {
    let belief = match spec.kind {
        GameKind::Persuasion => Some(r.belief.ok_or_else(|| Error::Adapter {
            system: actor.id.clone(),
            status: None,
            diagnostics: "persuasion turn without a belief".into(),
        })?),
        _ => None,
    };
    Ok(Turn {
        round,
        actor: actor.id.clone(),
        move_label: r.move_label,
        argument: r.argument,
        belief,
        prediction: if spec.kind == GameKind::PredictionSurprise { r.prediction } else { None },
        original: None,
        compression: None,
        reconstruction: None,
    })
}

/// One leg with `first` opening every round; rounds are leg-local.
fn play_leg(spec: &GameSpec, first: &SystemHandle, second: &SystemHandle, topic: &str, seed: u64) -> Result<Vec<Turn>> {
    let leg_seed = mix(&[seed, stable_hash(&first.id), stable_hash(&second.id), stable_hash(topic)]);
    let mut history: Vec<Turn> = Vec::new();
    for round in 0..spec.half() {
        if spec.kind == GameKind::CompressionReconstruction {
            let original = original_for(topic, seed, round);
            let mut req = request(spec, first, second, topic, round, Role::Compressor, &history, leg_seed);
            req.original = Some(original.clone());
            let resp = play_turn(first, &req)?;
            let compression = resp.compression.clone().ok_or_else(|| Error::Adapter {
                system: first.id.clone(),
                status: None,
                diagnostics: "compressor returned no compression".into(),
            })?;
            let mut c = record(round, first, resp, spec)?;
            c.original = Some(original);
            c.compression = Some(compression.clone());
            history.push(c);

            let mut req = request(spec, second, first, topic, round, Role::Reconstructor, &history, leg_seed);
            req.compression = Some(compression);
            let resp = play_turn(second, &req)?;
            let reconstruction = resp.reconstruction.clone().ok_or_else(|| Error::Adapter {
                system: second.id.clone(),
                status: None,
                diagnostics: "reconstructor returned no reconstruction".into(),
            })?;
            let mut r = record(round, second, resp, spec)?;
            r.reconstruction = Some(reconstruction);
            history.push(r);
        } else {
            for (me, them) in [(first, second), (second, first)] {
                let req = request(spec, me, them, topic, round, Role::Debater, &history, leg_seed);
                let resp = play_turn(me, &req)?;
                history.push(record(round, me, resp, spec)?);
            }
        }
    }
    Ok(history)
}

pub fn match_id(spec: &GameSpec, a: &str, b: &str, seed: u64) -> String {
    format!("{}__{a}__{b}__s{seed}", spec.kind)
}

/// Plays `a` against `b`: `a` opens the first leg, `b` the second.
pub fn run_match(spec: &GameSpec, a: &SystemHandle, b: &SystemHandle, topic: &str, seed: u64) -> Result<MatchResult> {
    spec.validate()?;
    if a.id == b.id {
        return Err(Error::InvalidComparison(format!("system `{}` cannot play itself", a.id)));
    }
    let half = spec.half();
    let mut turns = play_leg(spec, a, b, topic, seed)?;
    turns.extend(play_leg(spec, b, a, topic, seed)?.into_iter().map(|mut t| {
        t.round += half;
        t
    }));
    let transcript = Transcript {
        spec: spec.clone(),
        a: a.id.clone(),
        b: b.id.clone(),
        topic: topic.to_string(),
        seed,
        turns,
    };
    let (score_a, score_b) = score_transcript(&transcript)?;
    Ok(MatchResult {
        match_id: match_id(spec, &a.id, &b.id, seed),
        seed,
        transcript,
        score_a,
        score_b,
        winner: Winner::from_scores(score_a, score_b),
    })
}

/// Scores a stored match again from its transcript alone.
pub fn rescore(m: &MatchResult) -> Result<(f64, f64)> {
    score_transcript(&m.transcript)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::adapters::{Request, Responder, Response, ScriptTable};
    use crate::games::{Persona, TurnResponse};
    use crate::similarity::Output;

    fn agent(id: &str, persona: Persona) -> SystemHandle {
        let t = ScriptTable::from_outputs([("d", Output::Text("x".into()))]).unwrap();
        SystemHandle::scripted(id, t).with_persona(persona)
    }

    fn random_persona(seed: u64) -> Persona {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let words = ["price", "risk", "quality", "speed", "trust", "cost", "scale"];
        let mut pick = |n: usize| -> Vec<String> {
            (0..n)
                .map(|_| {
                    (0..rng.gen_range(1..4)).map(|_| words[rng.gen_range(0..words.len())]).collect::<Vec<_>>().join(" ")
                })
                .collect()
        };
        let moves = pick(2);
        let args = pick(3);
        let mut p = Persona::new(moves, args);
        p.stance = (seed % 10) as f64 / 10.0;
        p.susceptibility = ((seed / 10) % 10) as f64 / 10.0;
        p.randomized = seed % 2 == 0;
        p
    }

    const TOPIC: &str = "Claims above the limit need review. Late claims are rejected. Receipts must be itemised.";

    #[test]
    fn identical_scripts_tie() {
        for kind in GameKind::ALL {
            let p = Persona::new(["open", "press"], ["costs fall", "quality holds", "risk is low"]);
            let m = run_match(&GameSpec::new(kind), &agent("a", p.clone()), &agent("b", p), TOPIC, 5).unwrap();
            assert_eq!(m.winner, Winner::Tie, "{kind}");
            assert_eq!(m.score_a, m.score_b);
        }
    }

    #[test]
    fn label_swap_transposes_scores() {
        for s in 0..20u64 {
            for kind in GameKind::ALL {
                let a = agent("alpha", random_persona(s));
                let b = agent("beta", random_persona(s + 1000));
                let spec = GameSpec::new(kind);
                let ab = run_match(&spec, &a, &b, TOPIC, s).unwrap();
                let ba = run_match(&spec, &b, &a, TOPIC, s).unwrap();
                assert_eq!((ab.score_a, ab.score_b), (ba.score_b, ba.score_a), "{kind} seed {s}");
            }
        }
    }

    #[test]
    fn deterministic_and_rescorable() {
        let a = agent("alpha", random_persona(2));
        let b = agent("beta", random_persona(4));
        let spec = GameSpec::new(GameKind::Persuasion);
        let m1 = run_match(&spec, &a, &b, TOPIC, 9).unwrap();
        assert_eq!(m1, run_match(&spec, &a, &b, TOPIC, 9).unwrap());
        let (x, y) = rescore(&m1).unwrap();
        assert_eq!((x.to_bits(), y.to_bits()), (m1.score_a.to_bits(), m1.score_b.to_bits()));
        assert_eq!(m1.transcript.turns.len(), 2 * spec.rounds as usize);
    }

    #[test]
    fn random_opponent_prediction_near_half() {
        let mut p = Persona::new(["x", "y"], ["noise"]);
        p.randomized = true;
        let rnd = agent("rnd", p);
        let fixed = agent("fixed", Persona::new(["z"], ["steady"]));
        let spec = GameSpec::new(GameKind::PredictionSurprise).with_rounds(100);
        let m = run_match(&spec, &fixed, &rnd, TOPIC, 1).unwrap();
        let hits = m
            .transcript
            .turns
            .windows(2)
            .filter(|w| w[0].actor == "fixed" && w[1].actor == "rnd")
            .filter(|w| w[0].prediction.as_deref() == Some(w[1].move_label.as_str()))
            .count();
        let chances = m.transcript.turns.windows(2).filter(|w| w[0].actor == "fixed" && w[1].actor == "rnd").count();
        let frac = hits as f64 / chances as f64;
        assert!((frac - 0.5).abs() <= 0.1, "{frac}");
    }

    struct Broken;
    impl Responder for Broken {
        fn respond(&self, _r: &Request) -> Result<Response> {
            Err(Error::Config("unused".into()))
        }
        fn play_turn(&self, _t: &TurnRequest) -> Result<TurnResponse> {
            Err(Error::Adapter { system: "broken".into(), status: Some(1), diagnostics: "crash".into() })
        }
    }

    #[test]
    fn adapter_failure_aborts_match() {
        let a = agent("a", Persona::new(["m"], ["x"]));
        let b = SystemHandle::custom("b", Arc::new(Broken), true);
        assert!(matches!(
            run_match(&GameSpec::new(GameKind::Persuasion), &a, &b, TOPIC, 0),
            Err(Error::Adapter { .. })
        ));
    }
}
