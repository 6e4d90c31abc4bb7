//! Step-level best-first search with reward-adaptive candidate widths.
//!
//! A policy model proposes candidate reasoning steps, a reward scorer rates
//! each candidate in `[0, 1]`, and the engine commits the top-scoring
//! candidate per step. The number of candidates requested at a step (the
//! *thinking mode*: simple/medium/complex = 2/4/8) adapts to the reward of
//! the previous step, and critically bad steps are redone once at the
//! widest setting.
//!
//! The crate is organized around the pieces an experiment needs:
//!
//! - [`search`] — domain types and the per-episode control loop
//! - [`strategy`] — mode-selection policies (adaptive, fixed, random,
//!   solution-level escalation)
//! - [`model`] — generator/scorer traits, an OpenAI-compatible HTTP client,
//!   and the contracts simulators implement
//! - [`synthetic`] — a seeded synthetic task environment with an analytic
//!   accuracy oracle for desk-scale verification
//! - [`analysis`] — accuracy/token aggregation and stage-normalized mode
//!   distributions
//! - [`answer`] — answer extraction and normalized exact-match checking

pub mod analysis;
pub mod answer;
pub mod config;
pub mod model;
pub mod search;
pub mod seeding;
pub mod strategy;
pub mod synthetic;
pub mod testing;

pub use config::{AnswerMarker, ConfigError, PenaltyPolicy, PenaltySelectionPool, SearchConfig};
pub use search::{
    next_mode, run_episode, select_best, CandidateStep, EpisodeError, Problem, ReasoningTrace,
    StepContext, StepRecord, Termination, ThinkingMode,
};
pub use strategy::{solution_verification_run, Strategy, StrategyKind};
