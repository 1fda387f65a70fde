use super::{GameKind, Transcript, Turn};
use crate::error::{Error, Result};
use crate::similarity::{similarity, tokens, Output, SimilarityKind};

fn text_sim(a: &str, b: &str, judge: SimilarityKind) -> Result<f64> {
    similarity(&Output::Text(a.to_string()), &Output::Text(b.to_string()), judge)
}

/// 1 − max similarity of `argument` to each of `earlier`; 1 when nothing precedes it.
pub fn novelty(earlier: &[&str], argument: &str, judge: SimilarityKind) -> Result<f64> {
    let mut best: f64 = 0.0;
    for e in earlier {
        best = best.max(text_sim(e, argument, judge)?);
    }
    Ok((1.0 - best).clamp(0.0, 1.0))
}

fn leg_novelties(turns: &[Turn], judge: SimilarityKind) -> Result<Vec<f64>> {
    let args: Vec<&str> = turns.iter().map(|t| t.argument.as_str()).collect();
    (0..args.len()).map(|k| novelty(&args[..k], args[k], judge)).collect()
}

fn seat(t: &Transcript, turn: &Turn) -> Result<usize> {
    if turn.actor == t.a {
        Ok(0)
    } else if turn.actor == t.b {
        Ok(1)
    } else {
        Err(Error::MalformedTranscript(format!(
            "round {}: actor `{}` is not a player",
            turn.round, turn.actor
        )))
    }
}

fn persuasion_leg(t: &Transcript, leg: &[Turn]) -> Result<[f64; 2]> {
    let nov = leg_novelties(leg, t.spec.judge)?;
    let mut last: [Option<f64>; 2] = [None, None];
    let mut induced = [0.0; 2];
    let mut penalty = [0.0; 2];
    for (k, turn) in leg.iter().enumerate() {
        let p = seat(t, turn)?;
        let belief = turn.belief.ok_or_else(|| {
            Error::MalformedTranscript(format!("round {}: `{}` stated no belief", turn.round, turn.actor))
        })?;
        if !(0.0..=1.0).contains(&belief) {
            return Err(Error::MalformedTranscript(format!(
                "round {}: belief {belief} outside [0, 1]",
                turn.round
            )));
        }
        if let Some(prev) = last[p] {
            if k > 0 && leg[k - 1].actor != turn.actor {
                let d = (belief - prev).abs();
                induced[1 - p] += d;
                if nov[k - 1] < t.spec.novelty_threshold {
                    penalty[p] += d;
                }
            }
        }
        last[p] = Some(belief);
    }
    let l = t.spec.penalty_weight;
    Ok([induced[0] - l * penalty[0], induced[1] - l * penalty[1]])
}

/// Induced opponent belief shifts minus λ × unjustified self-shifts.
pub fn score_persuasion(t: &Transcript) -> Result<(f64, f64)> {
    let (l0, l1) = t.legs();
    let s0 = persuasion_leg(t, l0)?;
    let s1 = persuasion_leg(t, l1)?;
    Ok((s0[0] + s1[0], s0[1] + s1[1]))
}

#[derive(Default, Clone, Copy)]
struct PredictionTally {
    hits: u32,
    predicted: u32,
    novelty_sum: f64,
    argued: u32,
}

fn prediction_leg(t: &Transcript, leg: &[Turn]) -> Result<[PredictionTally; 2]> {
    let nov = leg_novelties(leg, t.spec.judge)?;
    let mut tally = [PredictionTally::default(); 2];
    for (k, turn) in leg.iter().enumerate() {
        let p = seat(t, turn)?;
        tally[p].novelty_sum += nov[k];
        tally[p].argued += 1;
        let Some(next) = leg[k + 1..].iter().find(|n| n.actor != turn.actor) else {
            continue;
        };
        let pred = turn.prediction.as_deref().ok_or_else(|| {
            Error::MalformedTranscript(format!("round {}: `{}` made no prediction", turn.round, turn.actor))
        })?;
        tally[p].predicted += 1;
        if pred == next.move_label {
            tally[p].hits += 1;
        }
    }
    Ok(tally)
}

/// Fraction of correct next-move predictions plus mean argument novelty.
pub fn score_prediction_surprise(t: &Transcript) -> Result<(f64, f64)> {
    let (l0, l1) = t.legs();
    let a = prediction_leg(t, l0)?;
    let b = prediction_leg(t, l1)?;
    let score = |x: PredictionTally, y: PredictionTally| {
        let predicted = x.predicted + y.predicted;
        let argued = x.argued + y.argued;
        let acc = if predicted == 0 { 0.0 } else { (x.hits + y.hits) as f64 / predicted as f64 };
        let nov = if argued == 0 { 0.0 } else { (x.novelty_sum + y.novelty_sum) / argued as f64 };
        acc + nov
    };
    Ok((score(a[0], b[0]), score(a[1], b[1])))
}

fn compression_leg(t: &Transcript, leg: &[Turn], budget: usize, judge: SimilarityKind) -> Result<[(f64, u32); 2]> {
    let mut out = [(0.0, 0u32); 2];
    let mut k = 0;
    while k < leg.len() {
        let c = &leg[k];
        let (original, compression) = match (&c.original, &c.compression) {
            (Some(o), Some(z)) => (o, z),
            _ => {
                return Err(Error::MalformedTranscript(format!(
                    "round {}: compressor turn lacks original or compression",
                    c.round
                )))
            }
        };
        let r = leg.get(k + 1).filter(|r| r.round == c.round && r.actor != c.actor);
        let reconstruction = r.and_then(|r| r.reconstruction.as_ref()).ok_or_else(|| {
            Error::MalformedTranscript(format!("round {}: missing reconstruction", c.round))
        })?;
        let p = seat(t, c)?;
        let s = if tokens(compression).len() <= budget {
            text_sim(original, reconstruction, judge)?
        } else {
            0.0
        };
        out[p].0 += s;
        out[p].1 += 1;
        k += 2;
    }
    Ok(out)
}

/// Mean faithfulness of reconstructions over the rounds each player compressed.
pub fn score_compression(t: &Transcript, budget: usize, judge: SimilarityKind) -> Result<(f64, f64)> {
    let (l0, l1) = t.legs();
    let a = compression_leg(t, l0, budget, judge)?;
    let b = compression_leg(t, l1, budget, judge)?;
    let mean = |x: (f64, u32), y: (f64, u32)| {
        let n = x.1 + y.1;
        if n == 0 { 0.0 } else { (x.0 + y.0) / n as f64 }
    };
    Ok((mean(a[0], b[0]), mean(a[1], b[1])))
}

/// Scores a transcript under its own game spec.
pub fn score_transcript(t: &Transcript) -> Result<(f64, f64)> {
    match t.spec.kind {
        GameKind::Persuasion => score_persuasion(t),
        GameKind::PredictionSurprise => score_prediction_surprise(t),
        GameKind::CompressionReconstruction => score_compression(t, t.spec.budget, t.spec.judge),
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::games::GameSpec;

    fn turn(round: u32, actor: &str, label: &str, arg: &str) -> Turn {
        Turn {
            round,
            actor: actor.into(),
            move_label: label.into(),
            argument: arg.into(),
            belief: None,
            prediction: None,
            original: None,
            compression: None,
            reconstruction: None,
        }
    }

    fn transcript(kind: GameKind, rounds: u32, turns: Vec<Turn>) -> Transcript {
        Transcript {
            spec: GameSpec::new(kind).with_rounds(rounds),
            a: "A".into(),
            b: "B".into(),
            topic: "t".into(),
            seed: 0,
            turns,
        }
    }

    fn believing(mut t: Turn, b: f64) -> Turn {
        t.belief = Some(b);
        t
    }

    #[test]
    fn persuasion_without_shifts_is_zero() {
        let turns = vec![
            believing(turn(0, "A", "m", "x one"), 0.5),
            believing(turn(0, "B", "m", "y two"), 0.5),
            believing(turn(1, "B", "m", "x three"), 0.5),
            believing(turn(1, "A", "m", "y four"), 0.5),
        ];
        assert_eq!(score_persuasion(&transcript(GameKind::Persuasion, 2, turns)).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn induced_shift_counts_for_the_persuader() {
        let turns = vec![
            believing(turn(0, "A", "m", "alpha"), 0.5),
            believing(turn(0, "B", "m", "beta"), 0.5),
            believing(turn(1, "A", "m", "gamma"), 0.5),
            believing(turn(1, "B", "m", "delta"), 0.7),
        ];
        let (a, b) = score_persuasion(&transcript(GameKind::Persuasion, 4, turns)).unwrap();
        assert!((a - 0.2).abs() < 1e-12);
        assert_eq!(b, 0.0);
    }

    #[test]
    fn repeated_argument_self_shift_is_penalised() {
        let turns = vec![
            believing(turn(0, "A", "m", "same words"), 0.5),
            believing(turn(0, "B", "m", "other"), 0.5),
            believing(turn(1, "A", "m", "other"), 0.5),
            believing(turn(1, "B", "m", "third"), 0.6),
        ];
        // B's 0.1 shift follows A's verbatim repeat (novelty 0): A induced 0.1, B pays λ·0.1
        let (a, b) = score_persuasion(&transcript(GameKind::Persuasion, 4, turns)).unwrap();
        assert!((a - 0.1).abs() < 1e-12);
        assert!((b + 0.1).abs() < 1e-12);
    }

    #[test]
    fn missing_belief_is_malformed() {
        let turns = vec![turn(0, "A", "m", "x"), turn(0, "B", "m", "y")];
        assert!(matches!(
            score_persuasion(&transcript(GameKind::Persuasion, 2, turns)),
            Err(Error::MalformedTranscript(_))
        ));
    }

    fn predicting(mut t: Turn, p: &str) -> Turn {
        t.prediction = Some(p.into());
        t
    }

    #[test]
    fn constant_opponent_is_fully_predictable() {
        let mut turns = Vec::new();
        for r in 0..4 {
            turns.push(predicting(turn(r, "A", "a", &format!("fresh{r}")), "k"));
            turns.push(predicting(turn(r, "B", "k", "same"), "a"));
        }
        let t = transcript(GameKind::PredictionSurprise, 8, turns);
        let (l0, _) = t.legs();
        assert_eq!(l0.len(), 8);
        let tally = prediction_leg(&t, l0).unwrap();
        assert_eq!((tally[0].hits, tally[0].predicted), (4, 4));
        // B repeats verbatim: only its first turn is novel
        assert_eq!(tally[1].novelty_sum, 1.0);
    }

    #[test]
    fn last_turn_may_omit_prediction() {
        let turns = vec![predicting(turn(0, "A", "a", "x"), "b"), turn(0, "B", "b", "y")];
        let t = transcript(GameKind::PredictionSurprise, 2, turns);
        assert!(score_prediction_surprise(&t).is_ok());
        let turns = vec![turn(0, "A", "a", "x"), turn(0, "B", "b", "y")];
        let t = transcript(GameKind::PredictionSurprise, 2, turns);
        assert!(matches!(score_prediction_surprise(&t), Err(Error::MalformedTranscript(_))));
    }

    fn comp(round: u32, c: &str, r: &str, original: &str, z: &str, rec: &str) -> [Turn; 2] {
        let mut x = turn(round, c, "compress", "");
        x.original = Some(original.into());
        x.compression = Some(z.into());
        let mut y = turn(round, r, "reconstruct", "");
        y.reconstruction = Some(rec.into());
        [x, y]
    }

    #[test]
    fn compression_examples() {
        let mut turns = Vec::new();
        turns.extend(comp(0, "A", "B", "the cat sat", "the cat sat", "the cat sat"));
        turns.extend(comp(1, "B", "A", "a b c d e f g h i j", "a b c d e f g h i j", "a b c d e f g h i j"));
        let mut t = transcript(GameKind::CompressionReconstruction, 2, turns);
        t.spec.budget = 5;
        let (a, b) = score_transcript(&t).unwrap();
        assert_eq!((a, b), (1.0, 0.0));
    }

    #[test]
    fn compression_matches_token_set_oracle() {
        let original = "w1 w2 w3 w4 w5 w6";
        let recon = "w1 w2 w3 x1";
        let mut turns = Vec::new();
        turns.extend(comp(0, "A", "B", original, "w1 w2 w3", recon));
        turns.extend(comp(1, "B", "A", original, "w1", "w1"));
        let t = transcript(GameKind::CompressionReconstruction, 2, turns);
        let o: BTreeSet<&str> = original.split(' ').collect();
        let r: BTreeSet<&str> = recon.split(' ').collect();
        let oracle = o.intersection(&r).count() as f64 / o.union(&r).count() as f64;
        let (a, _) = score_compression(&t, 8, SimilarityKind::TokenJaccard).unwrap();
        assert!((a - oracle).abs() < 1e-15);
    }

    #[test]
    fn missing_reconstruction_is_malformed() {
        let [x, _] = comp(0, "A", "B", "o", "o", "o");
        let t = transcript(GameKind::CompressionReconstruction, 2, vec![x]);
        assert!(matches!(score_transcript(&t), Err(Error::MalformedTranscript(_))));
    }

    #[test]
    fn novelty_of_verbatim_repeat_is_zero() {
        let j = SimilarityKind::TokenJaccard;
        assert_eq!(novelty(&[], "x", j).unwrap(), 1.0);
        assert_eq!(novelty(&["a b"], "a b", j).unwrap(), 0.0);
    }
}
