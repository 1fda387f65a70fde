//! Label-free comparative risk assessment.
//!
//! Measures how much risk a new system adds over an accepted baseline using
//! only observable outputs: predictability under repetition and perturbation,
//! comparative capability, and dominance in symmetric games.

pub mod adapters;
pub mod aggregate;
pub mod assumptions;
pub mod capability;
pub mod catalog;
pub mod error;
pub mod games;
pub mod perturb;
pub mod pipeline;
pub mod predictability;
pub mod risk;
pub mod rng;
pub mod similarity;
pub mod stats;

pub use error::{Error, Result};
pub use risk::{marginal_risk, RiskDelta, RiskProfile};
