//! Symmetric two-player games and tournaments.
//!
//! A match is two independent legs of `rounds / 2` rounds: in the first leg
//! player `a` moves first, in the second `b` does. Each leg starts from an
//! empty history with a seed that depends only on who moves first, and scores
//! are the sum of per-leg subtotals, so swapping the players swaps the scores
//! exactly.

mod agent;
mod engine;
mod scoring;
mod tournament;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::SimilarityKind;

pub use agent::{default_persona, play_turn};
pub use engine::{rescore, run_match};
pub use scoring::{novelty, score_compression, score_persuasion, score_prediction_surprise, score_transcript};
pub use tournament::{
    read_match, strategy_diversity, tournament, write_match, InvalidMatch, TournamentResult, WinMatrix,
};

pub const DEFAULT_ROUNDS: u32 = 6;
pub const DEFAULT_BUDGET: usize = 8;
pub const DEFAULT_PENALTY_WEIGHT: f64 = 1.0;
pub const DEFAULT_NOVELTY_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameKind {
    Persuasion,
    PredictionSurprise,
    CompressionReconstruction,
}

impl GameKind {
    pub const ALL: [GameKind; 3] = [
        GameKind::Persuasion,
        GameKind::PredictionSurprise,
        GameKind::CompressionReconstruction,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            GameKind::Persuasion => "persuasion",
            GameKind::PredictionSurprise => "prediction-surprise",
            GameKind::CompressionReconstruction => "compression-reconstruction",
        }
    }
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GameKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        GameKind::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown game `{s}`")))
    }
}

fn default_rounds() -> u32 {
    DEFAULT_ROUNDS
}
fn default_budget() -> usize {
    DEFAULT_BUDGET
}
fn default_penalty() -> f64 {
    DEFAULT_PENALTY_WEIGHT
}
fn default_threshold() -> f64 {
    DEFAULT_NOVELTY_THRESHOLD
}
fn default_judge() -> SimilarityKind {
    SimilarityKind::TokenJaccard
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    pub kind: GameKind,
    /// Even; roles swap after `rounds / 2`.
    #[serde(default = "default_rounds")]
    pub rounds: u32,
    #[serde(default = "default_judge")]
    pub judge: SimilarityKind,
    /// Token budget of a compression.
    #[serde(default = "default_budget")]
    pub budget: usize,
    /// λ: weight of unjustified self-shifts in persuasion.
    #[serde(default = "default_penalty")]
    pub penalty_weight: f64,
    /// τ: arguments below this novelty do not justify a belief change.
    #[serde(default = "default_threshold")]
    pub novelty_threshold: f64,
}

impl GameSpec {
    pub fn new(kind: GameKind) -> Self {
        Self {
            kind,
            rounds: DEFAULT_ROUNDS,
            judge: default_judge(),
            budget: DEFAULT_BUDGET,
            penalty_weight: DEFAULT_PENALTY_WEIGHT,
            novelty_threshold: DEFAULT_NOVELTY_THRESHOLD,
        }
    }

    pub fn with_rounds(mut self, rounds: u32) -> Self {
        self.rounds = rounds;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 || self.rounds % 2 != 0 {
            return Err(Error::Config(format!("game rounds must be even and positive, got {}", self.rounds)));
        }
        if self.budget == 0 {
            return Err(Error::Config("compression budget must be at least 1 token".into()));
        }
        if !(self.penalty_weight >= 0.0 && self.penalty_weight.is_finite()) {
            return Err(Error::Config(format!("penalty weight must be ≥ 0, got {}", self.penalty_weight)));
        }
        if !(0.0..=1.0).contains(&self.novelty_threshold) {
            return Err(Error::Config(format!(
                "novelty threshold must be in [0, 1], got {}",
                self.novelty_threshold
            )));
        }
        if self.judge.is_numeric() {
            return Err(Error::Config("game judges compare text; numeric proximity is not allowed".into()));
        }
        Ok(())
    }

    pub fn half(&self) -> u32 {
        self.rounds / 2
    }
}

/// One move in a transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub round: u32,
    pub actor: String,
    pub move_label: String,
    pub argument: String,
    /// Present iff the game is persuasion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub belief: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compression: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reconstruction: Option<String>,
}

/// A complete, replayable record of one match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub spec: GameSpec,
    pub a: String,
    pub b: String,
    pub topic: String,
    pub seed: u64,
    pub turns: Vec<Turn>,
}

impl Transcript {
    /// Turns of the first and second leg.
    pub fn legs(&self) -> (&[Turn], &[Turn]) {
        let half = self.spec.half();
        let split = self.turns.partition_point(|t| t.round < half);
        self.turns.split_at(split)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    A,
    B,
    Tie,
}

impl Winner {
    pub fn from_scores(a: f64, b: f64) -> Self {
        if a > b {
            Winner::A
        } else if b > a {
            Winner::B
        } else {
            Winner::Tie
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub match_id: String,
    pub seed: u64,
    pub transcript: Transcript,
    pub score_a: f64,
    pub score_b: f64,
    pub winner: Winner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Debater,
    Compressor,
    Reconstructor,
}

/// What an agent sees when asked to move. `history` holds the current leg only,
/// with leg-local round numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRequest {
    pub game: GameKind,
    pub round: u32,
    pub role: Role,
    pub self_id: String,
    pub opponent_id: String,
    pub topic: String,
    pub history: Vec<Turn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compression: Option<String>,
    pub budget: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnResponse {
    pub move_label: String,
    #[serde(default)]
    pub argument: String,
    #[serde(default)]
    pub belief: Option<f64>,
    #[serde(default)]
    pub prediction: Option<String>,
    #[serde(default)]
    pub compression: Option<String>,
    #[serde(default)]
    pub reconstruction: Option<String>,
}

/// Game behaviour of a mock system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Persona {
    pub moves: Vec<String>,
    pub arguments: Vec<String>,
    /// Initial belief in the topic, in [0, 1].
    #[serde(default = "half")]
    pub stance: f64,
    /// Fraction of the belief gap closed after a fully novel opposing argument.
    #[serde(default = "half")]
    pub susceptibility: f64,
    /// Fraction of tokens kept when compressing, in (0, 1].
    #[serde(default = "half")]
    pub keep_fraction: f64,
    /// Draw moves and arguments at random instead of cycling through them.
    #[serde(default)]
    pub randomized: bool,
}

fn half() -> f64 {
    0.5
}

impl Persona {
    pub fn new<S: Into<String>>(moves: impl IntoIterator<Item = S>, arguments: impl IntoIterator<Item = S>) -> Self {
        Self {
            moves: moves.into_iter().map(Into::into).collect(),
            arguments: arguments.into_iter().map(Into::into).collect(),
            stance: 0.5,
            susceptibility: 0.5,
            keep_fraction: 0.5,
            randomized: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.moves.is_empty() || self.arguments.is_empty() {
            return Err(Error::Config("persona needs at least one move and one argument".into()));
        }
        for (name, v) in [("stance", self.stance), ("susceptibility", self.susceptibility)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("persona {name} must be in [0, 1], got {v}")));
            }
        }
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "persona keep fraction must be in (0, 1], got {}",
                self.keep_fraction
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(GameSpec::new(GameKind::Persuasion).validate().is_ok());
        assert!(GameSpec::new(GameKind::Persuasion).with_rounds(3).validate().is_err());
        assert!(GameSpec::new(GameKind::Persuasion).with_rounds(0).validate().is_err());
        let mut s = GameSpec::new(GameKind::CompressionReconstruction);
        s.budget = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn winner_follows_scores() {
        assert_eq!(Winner::from_scores(1.0, 0.5), Winner::A);
        assert_eq!(Winner::from_scores(0.5, 1.0), Winner::B);
        assert_eq!(Winner::from_scores(0.5, 0.5), Winner::Tie);
    }

    #[test]
    fn game_kind_round_trips() {
        for g in GameKind::ALL {
            assert_eq!(g.as_str().parse::<GameKind>().unwrap(), g);
        }
    }
}
