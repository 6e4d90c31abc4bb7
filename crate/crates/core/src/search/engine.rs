//! The per-episode control loop: expand, select, penalize, terminate.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::answer::check_answer;
use crate::config::{PenaltyPolicy, PenaltySelectionPool, SearchConfig};
use crate::model::{ModelError, StepGenerator, StepScorer};
use crate::search::{
    is_terminal, select_best, CandidateStep, Problem, ReasoningTrace, SearchError, StepContext,
    StepRecord, Termination, ThinkingMode,
};
use crate::strategy::Strategy;

/// Error inside a single step.
#[derive(Debug, Error)]
pub enum StepError {
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Steps committed before an episode failed, kept for diagnosis.
#[derive(Debug, Clone)]
pub struct PartialTrace {
    pub problem_id: String,
    pub strategy_name: String,
    pub seed: u64,
    pub steps: Vec<StepRecord>,
}

/// Hard failure of a generator or scorer, carrying the partial trace.
#[derive(Debug, Error)]
#[error(
    "episode for problem '{}' (strategy {}) failed at step {}: {source}",
    partial.problem_id,
    partial.strategy_name,
    partial.steps.len() + 1
)]
pub struct EpisodeError {
    #[source]
    pub source: StepError,
    pub partial: Box<PartialTrace>,
}

/// Generate and score one step's candidate set.
///
/// Returns exactly `config.width_of(mode)` candidates in generation order,
/// each with its score populated (clamped to `[0, 1]`). A generator that
/// returns the wrong count or a scorer that returns a non-finite value is a
/// malformed-response error.
pub fn expand(
    ctx: &StepContext<'_>,
    mode: ThinkingMode,
    generator: &dyn StepGenerator,
    scorer: &dyn StepScorer,
    config: &SearchConfig,
    seed: u64,
) -> Result<Vec<CandidateStep>, ModelError> {
    let n = config.width_of(mode);
    let generated = generator.generate(ctx, n, config.temperature, seed)?;
    if generated.len() != n {
        return Err(ModelError::MalformedResponse(format!(
            "generator returned {} candidates, expected {n}",
            generated.len()
        )));
    }
    let mut out = Vec::with_capacity(n);
    for step in generated {
        let raw = scorer.score(ctx, &step.text)?;
        if !raw.is_finite() {
            return Err(ModelError::MalformedResponse(format!(
                "scorer returned non-finite value {raw}"
            )));
        }
        out.push(CandidateStep {
            text: step.text,
            tokens: step.tokens,
            score: raw.clamp(0.0, 1.0),
        });
    }
    Ok(out)
}

/// Redo a critically bad step at the widest width, per the configured
/// penalty policy.
///
/// Precondition: the record's effective score is below `value_bad`
/// (violations are rejected). Under `Once` the step is regenerated a single
/// time unless `already_penalized_count > 0`; under `Never` the record is
/// returned unchanged; under `UntilThreshold` regeneration repeats until
/// the effective score clears `value_bad` or the iteration cap is hit.
///
/// Selection follows `config.penalty_selection_pool`: `FreshOnly` picks the
/// argmax of the latest regenerated batch, `Union` picks the argmax over
/// the original candidates plus everything regenerated (ties prefer the
/// original selection, then lower indices).
pub fn apply_penalty(
    record: &mut StepRecord,
    ctx: &StepContext<'_>,
    generator: &dyn StepGenerator,
    scorer: &dyn StepScorer,
    config: &SearchConfig,
    already_penalized_count: usize,
    rng: &mut dyn RngCore,
) -> Result<(), StepError> {
    let pre_score = record.effective_score();
    if pre_score >= config.value_bad {
        return Err(SearchError::PenaltyNotApplicable {
            score: pre_score,
            value_bad: config.value_bad,
        }
        .into());
    }
    match config.penalty_policy {
        PenaltyPolicy::Never => Ok(()),
        PenaltyPolicy::Once => {
            if already_penalized_count > 0 {
                return Ok(());
            }
            regenerate(record, ctx, generator, scorer, config, 1, rng)
        }
        PenaltyPolicy::UntilThreshold => {
            if already_penalized_count >= config.penalty_iteration_cap {
                return Ok(());
            }
            let budget = config.penalty_iteration_cap - already_penalized_count;
            regenerate(record, ctx, generator, scorer, config, budget, rng)
        }
    }
}

/// Run up to `max_iterations` regeneration rounds, stopping early once the
/// effective score clears `value_bad`.
fn regenerate(
    record: &mut StepRecord,
    ctx: &StepContext<'_>,
    generator: &dyn StepGenerator,
    scorer: &dyn StepScorer,
    config: &SearchConfig,
    max_iterations: usize,
    rng: &mut dyn RngCore,
) -> Result<(), StepError> {
    let original_best = record.candidates[record.selected].score;
    let mut fresh: Vec<CandidateStep> = Vec::new();
    for _ in 0..max_iterations {
        let seed = rng.next_u64();
        let batch = expand(ctx, ThinkingMode::Complex, generator, scorer, config, seed)?;
        let batch_best = select_best(&batch)?;
        let batch_best_global = fresh.len() + batch_best;
        let batch_best_score = batch[batch_best].score;
        fresh.extend(batch);
        match config.penalty_selection_pool {
            PenaltySelectionPool::FreshOnly => {
                // Restart semantics: the latest batch replaces the step.
                record.penalty_selected = Some(batch_best_global);
            }
            PenaltySelectionPool::Union => {
                let current = match record.penalty_selected {
                    Some(i) => fresh[i].score,
                    None => original_best,
                };
                if batch_best_score > current {
                    record.penalty_selected = Some(batch_best_global);
                }
            }
        }
        let effective = match record.penalty_selected {
            Some(i) => fresh[i].score,
            None => original_best,
        };
        if effective >= config.value_bad {
            break;
        }
    }
    record.penalized = true;
    record.penalty_candidates = Some(fresh);
    Ok(())
}

/// Run one full episode: iterate expand → select → penalty check →
/// terminal check → next mode, starting from the strategy's initial mode.
///
/// Deterministic given `(seed, config, strategy)` and deterministic
/// components: all randomness flows from one seeded generator, with a
/// derived sub-seed per expansion call. The config must be valid (see
/// [`SearchConfig::validate`]).
pub fn run_episode(
    problem: &Problem,
    strategy: &Strategy,
    generator: &dyn StepGenerator,
    scorer: &dyn StepScorer,
    config: &SearchConfig,
    seed: u64,
) -> Result<ReasoningTrace, EpisodeError> {
    // Resolve the strategy's penalty behavior once so the step loop and
    // apply_penalty read a single source of truth.
    let mut cfg = config.clone();
    cfg.penalty_policy = strategy.effective_penalty_policy(config);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted: Vec<String> = Vec::new();
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut mode = strategy.initial_mode();

    macro_rules! fail {
        ($steps:expr, $err:expr) => {
            return Err(EpisodeError {
                source: $err,
                partial: Box::new(PartialTrace {
                    problem_id: problem.id.clone(),
                    strategy_name: strategy.name().to_string(),
                    seed,
                    steps: $steps,
                }),
            })
        };
    }

    let (final_answer, terminated) = loop {
        let index = steps.len() + 1;
        let ctx = StepContext {
            problem_id: &problem.id,
            question: &problem.question,
            accepted_steps: &accepted,
            step_index: index,
        };
        let width = cfg.width_of(mode);
        let expand_seed = rng.next_u64();
        let candidates = match expand(&ctx, mode, generator, scorer, &cfg, expand_seed) {
            Ok(c) => c,
            Err(e) => fail!(steps, e.into()),
        };
        let selected = match select_best(&candidates) {
            Ok(i) => i,
            Err(e) => fail!(steps, e.into()),
        };
        let mut record = StepRecord {
            index,
            mode,
            width,
            candidates,
            selected,
            penalized: false,
            penalty_candidates: None,
            penalty_selected: None,
        };
        if record.effective_score() < cfg.value_bad && cfg.penalty_policy != PenaltyPolicy::Never {
            if let Err(e) =
                apply_penalty(&mut record, &ctx, generator, scorer, &cfg, 0, &mut rng)
            {
                fail!(steps, e);
            }
        }
        let effective = record.effective_candidate().clone();
        // A penalized step was redone at the widest width, so the next
        // step's mode is judged as if the current step ran complex.
        let mode_for_next = if record.penalized {
            ThinkingMode::Complex
        } else {
            record.mode
        };
        accepted.push(effective.text.clone());
        steps.push(record);

        if let Some(term) = is_terminal(&effective.text, steps.len(), &cfg) {
            let answer = (term == Termination::Answered).then(|| effective.text.clone());
            break (answer, term);
        }
        mode = strategy.decide_next(mode_for_next, effective.score, &cfg, &mut rng);
    };

    let total_tokens = steps.iter().map(StepRecord::token_total).sum();
    let correct = final_answer
        .as_deref()
        .is_some_and(|text| check_answer(text, &problem.answer));
    Ok(ReasoningTrace {
        problem_id: problem.id.clone(),
        strategy_name: strategy.name().to_string(),
        steps,
        final_answer,
        terminated,
        correct,
        total_tokens,
        seed,
        attempts: None,
    })
}
