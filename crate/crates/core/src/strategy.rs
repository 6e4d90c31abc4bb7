//! Mode-selection policies.
//!
//! A [`Strategy`] decides the first step's mode and, after each committed
//! step, the next step's mode. Strategies are pure given the rng handle;
//! every episode owns its own seeded rng, so strategies are freely shared
//! across parallel episodes.
//!
//! Stable string identifiers (used in run configs and trace records):
//! `pats`, `pats-first-simple`, `pats-first-medium`, `all-simple`,
//! `all-medium`, `all-complex`, `random`, `solution-verification`,
//! `pats-no-penalty`, `pats-infinite-penalty`.

use rand::RngCore;
use thiserror::Error;

use crate::config::{PenaltyPolicy, SearchConfig};
use crate::model::{StepGenerator, StepScorer};
use crate::search::{
    next_mode, run_episode, AttemptRecord, EpisodeError, Problem, ReasoningTrace, StepRecord,
    ThinkingMode,
};
use crate::seeding::derive_seed;

/// The per-step mode-selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    /// Reward-adaptive switching: step down on good scores, jump to
    /// complex on low ones, retain otherwise.
    Adaptive,
    /// Always the same mode, ignoring scores.
    Fixed(ThinkingMode),
    /// Uniformly random mode for every step after the first.
    Random,
}

/// A named mode-selection policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    name: String,
    initial_mode: ThinkingMode,
    kind: StrategyKind,
    uses_penalty: bool,
}

impl Strategy {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn initial_mode(&self) -> ThinkingMode {
        self.initial_mode
    }

    pub fn kind(&self) -> StrategyKind {
        self.kind
    }

    pub fn uses_penalty(&self) -> bool {
        self.uses_penalty
    }

    /// Penalty policy in effect for an episode run under `config`.
    /// Strategies that do not use the penalty mechanism force `Never`.
    pub fn effective_penalty_policy(&self, config: &SearchConfig) -> PenaltyPolicy {
        if self.uses_penalty {
            config.penalty_policy
        } else {
            PenaltyPolicy::Never
        }
    }

    /// Mode for the next step, given the current step's mode and committed
    /// score. Total over valid inputs; `score` must already be clamped to
    /// `[0, 1]` (the engine guarantees this).
    pub fn decide_next(
        &self,
        current: ThinkingMode,
        score: f64,
        config: &SearchConfig,
        rng: &mut dyn RngCore,
    ) -> ThinkingMode {
        match self.kind {
            StrategyKind::Adaptive => next_mode(current, score.clamp(0.0, 1.0), config)
                .expect("clamped score is in range"),
            StrategyKind::Fixed(mode) => mode,
            StrategyKind::Random => ThinkingMode::ALL[(rng.next_u64() % 3) as usize],
        }
    }
}

/// Reward-adaptive strategy starting in `initial`. The canonical setting
/// starts complex; the `-first-simple`/`-first-medium` variants differ only
/// in the first step's mode.
pub fn pats_strategy(initial: ThinkingMode) -> Strategy {
    let name = match initial {
        ThinkingMode::Complex => "pats",
        ThinkingMode::Simple => "pats-first-simple",
        ThinkingMode::Medium => "pats-first-medium",
    };
    Strategy {
        name: name.to_string(),
        initial_mode: initial,
        kind: StrategyKind::Adaptive,
        uses_penalty: true,
    }
}

/// Fixed-mode baseline: every step uses `mode`, scores are ignored, no
/// penalty.
pub fn fixed_strategy(mode: ThinkingMode) -> Strategy {
    Strategy {
        name: format!("all-{mode}"),
        initial_mode: mode,
        kind: StrategyKind::Fixed(mode),
        uses_penalty: false,
    }
}

/// Random baseline: starts complex, then draws each subsequent step's mode
/// uniformly from the three modes using the episode rng.
pub fn random_strategy() -> Strategy {
    Strategy {
        name: "random".to_string(),
        initial_mode: ThinkingMode::Complex,
        kind: StrategyKind::Random,
        uses_penalty: false,
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown strategy name '{0}'")]
pub struct UnknownStrategy(pub String);

/// A strategy name resolved into something runnable: either a per-step
/// strategy with its (possibly adjusted) config, or the solution-level
/// escalation cascade.
#[derive(Debug, Clone)]
pub enum StrategyRunner {
    Episode {
        strategy: Strategy,
        config: SearchConfig,
    },
    SolutionVerification {
        config: SearchConfig,
    },
}

/// All stable strategy names, in presentation order.
pub const STRATEGY_NAMES: [&str; 10] = [
    "pats",
    "pats-first-simple",
    "pats-first-medium",
    "all-simple",
    "all-medium",
    "all-complex",
    "random",
    "solution-verification",
    "pats-no-penalty",
    "pats-infinite-penalty",
];

/// Resolve a stable strategy name against a base config.
///
/// `pats` starts in `base.initial_mode` (complex by default, making the
/// canonical setting); the named variants pin their own initial mode or
/// penalty policy regardless of the base config.
pub fn by_name(name: &str, base: &SearchConfig) -> Result<StrategyRunner, UnknownStrategy> {
    let runner = match name {
        "pats" => StrategyRunner::Episode {
            strategy: Strategy {
                name: "pats".to_string(),
                initial_mode: base.initial_mode,
                kind: StrategyKind::Adaptive,
                uses_penalty: true,
            },
            config: base.clone(),
        },
        "pats-first-simple" => StrategyRunner::Episode {
            strategy: pats_strategy(ThinkingMode::Simple),
            config: base.clone(),
        },
        "pats-first-medium" => StrategyRunner::Episode {
            strategy: pats_strategy(ThinkingMode::Medium),
            config: base.clone(),
        },
        "all-simple" => StrategyRunner::Episode {
            strategy: fixed_strategy(ThinkingMode::Simple),
            config: base.clone(),
        },
        "all-medium" => StrategyRunner::Episode {
            strategy: fixed_strategy(ThinkingMode::Medium),
            config: base.clone(),
        },
        "all-complex" => StrategyRunner::Episode {
            strategy: fixed_strategy(ThinkingMode::Complex),
            config: base.clone(),
        },
        "random" => StrategyRunner::Episode {
            strategy: random_strategy(),
            config: base.clone(),
        },
        "solution-verification" => StrategyRunner::SolutionVerification {
            config: base.clone(),
        },
        "pats-no-penalty" => StrategyRunner::Episode {
            strategy: Strategy {
                name: "pats-no-penalty".to_string(),
                initial_mode: ThinkingMode::Complex,
                kind: StrategyKind::Adaptive,
                uses_penalty: false,
            },
            config: base.clone(),
        },
        "pats-infinite-penalty" => {
            let mut config = base.clone();
            config.penalty_policy = PenaltyPolicy::UntilThreshold;
            StrategyRunner::Episode {
                strategy: Strategy {
                    name: "pats-infinite-penalty".to_string(),
                    initial_mode: ThinkingMode::Complex,
                    kind: StrategyKind::Adaptive,
                    uses_penalty: true,
                },
                config,
            }
        }
        other => return Err(UnknownStrategy(other.to_string())),
    };
    Ok(runner)
}

impl StrategyRunner {
    pub fn strategy_name(&self) -> &str {
        match self {
            StrategyRunner::Episode { strategy, .. } => strategy.name(),
            StrategyRunner::SolutionVerification { .. } => "solution-verification",
        }
    }

    pub fn config(&self) -> &SearchConfig {
        match self {
            StrategyRunner::Episode { config, .. } => config,
            StrategyRunner::SolutionVerification { config } => config,
        }
    }

    /// Run one episode under this runner.
    pub fn run(
        &self,
        problem: &Problem,
        generator: &dyn StepGenerator,
        scorer: &dyn StepScorer,
        seed: u64,
    ) -> Result<ReasoningTrace, EpisodeError> {
        match self {
            StrategyRunner::Episode { strategy, config } => {
                run_episode(problem, strategy, generator, scorer, config, seed)
            }
            StrategyRunner::SolutionVerification { config } => {
                solution_verification_run(problem, generator, scorer, config, seed)
            }
        }
    }
}

/// Solution-level escalation: solve with all-simple; accept if the final
/// step's score clears `value_low`, otherwise re-solve with all-medium
/// under the same check, then all-complex, whose answer is accepted
/// unconditionally.
///
/// Attempts are fresh episodes with derived sub-seeds (no candidate reuse).
/// The returned trace concatenates the attempts' steps (re-indexed
/// consecutively) so the token total bills every attempt; answer,
/// correctness, and termination come from the final attempt, and attempt
/// boundaries are recorded.
pub fn solution_verification_run(
    problem: &Problem,
    generator: &dyn StepGenerator,
    scorer: &dyn StepScorer,
    config: &SearchConfig,
    seed: u64,
) -> Result<ReasoningTrace, EpisodeError> {
    let stages = [
        ThinkingMode::Simple,
        ThinkingMode::Medium,
        ThinkingMode::Complex,
    ];
    let mut merged: Vec<StepRecord> = Vec::new();
    let mut attempts: Vec<AttemptRecord> = Vec::new();
    let mut accepted_trace: Option<ReasoningTrace> = None;

    for (k, &mode) in stages.iter().enumerate() {
        let strategy = fixed_strategy(mode);
        let attempt_seed = derive_seed(seed, k as u64);
        let trace = run_episode(problem, &strategy, generator, scorer, config, attempt_seed)?;
        let final_score = trace
            .steps
            .last()
            .map(StepRecord::effective_score)
            .unwrap_or(0.0);
        let is_last_stage = k == stages.len() - 1;
        let accepted = is_last_stage || final_score >= config.value_low;

        let first_step = merged.len() + 1;
        for (offset, step) in trace.steps.iter().enumerate() {
            let mut step = step.clone();
            step.index = first_step + offset;
            merged.push(step);
        }
        attempts.push(AttemptRecord {
            strategy: strategy.name().to_string(),
            first_step,
            last_step: merged.len(),
            final_score,
            accepted,
        });
        if accepted {
            accepted_trace = Some(trace);
            break;
        }
    }

    let last = accepted_trace.expect("final cascade stage accepts unconditionally");
    let total_tokens = merged.iter().map(StepRecord::token_total).sum();
    Ok(ReasoningTrace {
        problem_id: problem.id.clone(),
        strategy_name: "solution-verification".to_string(),
        steps: merged,
        final_answer: last.final_answer,
        terminated: last.terminated,
        correct: last.correct,
        total_tokens,
        seed,
        attempts: Some(attempts),
    })
}
