//! Domain types and the step-level control loop.
//!
//! One episode solves one problem. Each step, the engine asks the policy
//! model for `width` candidate continuations, scores every candidate with
//! the reward scorer, commits the top-scoring candidate, optionally redoes
//! the step if that score is critically bad, and picks the next step's mode
//! from the committed score.

mod engine;

pub use engine::{apply_penalty, expand, run_episode, EpisodeError, PartialTrace};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SearchConfig;

/// Per-step reasoning strategy, identified with the candidate width used at
/// that step. Ordered by effort: `Simple < Medium < Complex`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum ThinkingMode {
    Simple,
    Medium,
    Complex,
}

impl ThinkingMode {
    pub const ALL: [ThinkingMode; 3] = [
        ThinkingMode::Simple,
        ThinkingMode::Medium,
        ThinkingMode::Complex,
    ];

    /// One mode simpler; `Simple` stays `Simple`.
    pub fn step_down(self) -> ThinkingMode {
        match self {
            ThinkingMode::Complex => ThinkingMode::Medium,
            ThinkingMode::Medium => ThinkingMode::Simple,
            ThinkingMode::Simple => ThinkingMode::Simple,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ThinkingMode::Simple => "simple",
            ThinkingMode::Medium => "medium",
            ThinkingMode::Complex => "complex",
        }
    }
}

impl std::fmt::Display for ThinkingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One generated reasoning step: its text, the output tokens it cost, and
/// its reward score in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateStep {
    pub text: String,
    pub tokens: u64,
    pub score: f64,
}

/// Full record of one committed step, including everything that was
/// generated for it (and billed), whether it was committed or not.
///
/// `mode`/`width`/`candidates` describe the original expansion. When the
/// step was penalized, `penalty_candidates` holds every regenerated
/// candidate (in generation order, batches concatenated) and
/// `penalty_selected` indexes the final choice within it; a penalized step
/// with `penalty_selected == None` means the original selection also won
/// the post-penalty comparison (possible under the union selection pool).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based step number.
    pub index: usize,
    pub mode: ThinkingMode,
    pub width: usize,
    pub candidates: Vec<CandidateStep>,
    /// Index of the pre-penalty selection within `candidates`.
    pub selected: usize,
    pub penalized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty_candidates: Option<Vec<CandidateStep>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty_selected: Option<usize>,
}

impl StepRecord {
    /// The candidate this step finally committed (post-penalty if any).
    pub fn effective_candidate(&self) -> &CandidateStep {
        match (self.penalty_selected, &self.penalty_candidates) {
            (Some(i), Some(fresh)) => &fresh[i],
            _ => &self.candidates[self.selected],
        }
    }

    pub fn effective_score(&self) -> f64 {
        self.effective_candidate().score
    }

    /// Mode this step counts as after the fact: a penalized step was redone
    /// at the widest setting, so it counts as complex.
    pub fn effective_mode(&self) -> ThinkingMode {
        if self.penalized {
            ThinkingMode::Complex
        } else {
            self.mode
        }
    }

    /// Output tokens billed for this step: every candidate ever generated
    /// for it, committed or not.
    pub fn token_total(&self) -> u64 {
        let base: u64 = self.candidates.iter().map(|c| c.tokens).sum();
        let extra: u64 = self
            .penalty_candidates
            .iter()
            .flatten()
            .map(|c| c.tokens)
            .sum();
        base + extra
    }
}

/// How an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// A committed step carried an answer marker.
    Answered,
    /// The step cap was reached without an answer.
    StepCap,
    /// Reserved for runners that stop on an external token budget.
    BudgetCap,
}

/// Boundary of one attempt inside a multi-attempt episode (the
/// solution-level escalation strategy concatenates attempts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub strategy: String,
    /// 1-based step index of the attempt's first step in the merged trace.
    pub first_step: usize,
    /// 1-based step index of the attempt's last step in the merged trace.
    pub last_step: usize,
    /// Effective score of the attempt's final step.
    pub final_score: f64,
    pub accepted: bool,
}

/// Complete per-episode record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningTrace {
    pub problem_id: String,
    pub strategy_name: String,
    pub steps: Vec<StepRecord>,
    pub final_answer: Option<String>,
    pub terminated: Termination,
    pub correct: bool,
    /// Sum of tokens over every candidate generated in the episode,
    /// including penalty regenerations.
    pub total_tokens: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempts: Option<Vec<AttemptRecord>>,
}

impl ReasoningTrace {
    /// Recompute the token total from the candidate lists. Always equals
    /// `total_tokens` for traces produced by this crate.
    pub fn recomputed_tokens(&self) -> u64 {
        self.steps.iter().map(|s| s.token_total()).sum()
    }
}

/// A problem handed to the engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub question: String,
    /// Canonical reference answer used to judge correctness.
    pub answer: String,
}

/// Everything a generator or scorer may condition on at one step.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub problem_id: &'a str,
    pub question: &'a str,
    /// Texts of the committed steps so far, in order.
    pub accepted_steps: &'a [String],
    /// 1-based index of the step being generated.
    pub step_index: usize,
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("score {0} is outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("cannot select from an empty candidate list")]
    EmptyCandidates,
    #[error("penalty requires effective score < value_bad (score {score}, value_bad {value_bad})")]
    PenaltyNotApplicable { score: f64, value_bad: f64 },
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
}

/// Next step's mode from the committed score of the current step.
///
/// At or above `value_good` the mode steps down one level (simple stays
/// simple); below `value_low` it jumps to complex regardless of the current
/// mode; in between the current mode is retained. Pure.
pub fn next_mode(
    current: ThinkingMode,
    score: f64,
    config: &SearchConfig,
) -> Result<ThinkingMode, SearchError> {
    if !(0.0..=1.0).contains(&score) {
        return Err(SearchError::ScoreOutOfRange(score));
    }
    Ok(if score >= config.value_good {
        current.step_down()
    } else if score < config.value_low {
        ThinkingMode::Complex
    } else {
        current
    })
}

/// Index of the highest-scoring candidate; ties break toward the lowest
/// index.
pub fn select_best(candidates: &[CandidateStep]) -> Result<usize, SearchError> {
    let mut best = match candidates.first() {
        Some(_) => 0usize,
        None => return Err(SearchError::EmptyCandidates),
    };
    for (i, c) in candidates.iter().enumerate().skip(1) {
        if c.score > candidates[best].score {
            best = i;
        }
    }
    Ok(best)
}

/// Termination verdict after committing a step. `steps_so_far` counts the
/// just-committed step. An answer marker wins over the step cap.
pub fn is_terminal(
    selected_text: &str,
    steps_so_far: usize,
    config: &SearchConfig,
) -> Option<Termination> {
    if config.answer_markers.iter().any(|m| m.matches(selected_text)) {
        Some(Termination::Answered)
    } else if steps_so_far >= config.max_steps {
        Some(Termination::StepCap)
    } else {
        None
    }
}
