//! Luck-versus-skill analysis for round-robin sports leagues.
//!
//! The crate is organised around the pipeline a season goes through:
//!
//! - [`corpus`] loads match logs and roster tables and checks schedule regularity.
//! - [`baseline`] holds scoring schemes, outcome frequencies and the pure-luck
//!   moments of a team's final score.
//! - [`skillcoef`] computes the skill coefficient φ, its Monte-Carlo interval,
//!   the season classification and the team-removal procedure.
//! - [`features`] builds the player/team affiliation graph and per-team features.
//! - [`btpoisson`] fits the Bradley-Terry/Poisson random-effects model by
//!   Metropolis-Hastings and derives DIC and underdog win rates.
//! - [`synth`] simulates leagues under both models for calibration work.
//!
//! Replicate loops run on rayon when the `parallel` feature is enabled (the
//! default) and fall back to plain iterators otherwise. Every random stream is
//! derived from a caller-supplied seed, so results do not depend on the thread
//! count.

pub mod baseline;
pub mod btpoisson;
pub mod corpus;
pub mod exec;
pub mod features;
pub mod rng;
pub mod serde_float;
pub mod skillcoef;
pub mod stats;
pub mod synth;

pub use baseline::{BaselineMoments, ContextProbs, Outcome, ScoringScheme};
pub use corpus::{MatchRecord, RosterRecord, SeasonOptions, SeasonView};
pub use exec::Execution;
pub use skillcoef::{
    Classification, PhiOptions, PhiReport, RemovalTrace, ReplicateBaseline, SeasonTable,
};
