//! Seeded synthetic task environment with planted per-step difficulty and
//! an analytic accuracy oracle.
//!
//! Each synthetic problem is a sequence of per-step difficulties
//! `d_i ∈ [0, 1]`. A candidate at step `i` is correct with probability
//! `1 − d_i` (independent across candidates), so a width-`w` step contains
//! at least one correct candidate with probability `1 − d_i^w`. Correct
//! candidates score around `mu_correct`, incorrect ones around
//! `mu_incorrect`; with `sigma = 0` the scores separate perfectly and an
//! episode under a fixed width `w` is correct with probability exactly
//! `Π_i (1 − d_i^w)`.
//!
//! Once an incorrect candidate has been committed, every later candidate is
//! incorrect (a broken prefix cannot be recovered by continuing), so episode
//! correctness equals the conjunction of per-step selected-candidate
//! correctness. Redoing the *current* step via the penalty mechanism can
//! still rescue it, because the committed prefix is unchanged.
//!
//! Candidate text is self-describing: it encodes the problem id, step
//! index, draw index, a correctness tag (`[ok]`/`[bad]`), and the drawn
//! score, and the final step carries the boxed answer. The scorer reads the
//! encoded score back, so generator and scorer stay consistent without
//! shared state. Each candidate bills `tokens_per_candidate` output tokens.

use std::collections::BTreeMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SearchConfig;
use crate::model::{GeneratedStep, ModelError, StepGenerator, StepScorer};
use crate::search::{run_episode, EpisodeError, Problem, ReasoningTrace, StepContext};
use crate::seeding::{derive_seed, stable_hash64};
use crate::strategy::Strategy;

/// Score distribution of the simulated reward model.
///
/// Defaults are calibrated against the default thresholds: correct steps
/// (mean 0.9) usually clear `value_good = 0.85`, incorrect ones (mean 0.3)
/// fall below `value_bad = 0.4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub mu_correct: f64,
    pub mu_incorrect: f64,
    pub sigma: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            mu_correct: 0.9,
            mu_incorrect: 0.3,
            sigma: 0.05,
        }
    }
}

impl NoiseModel {
    pub fn with_sigma(sigma: f64) -> Self {
        Self {
            sigma,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), SyntheticError> {
        if !(self.mu_incorrect < self.mu_correct) {
            return Err(SyntheticError::InvalidParameter(format!(
                "mu_incorrect ({}) must be below mu_correct ({})",
                self.mu_incorrect, self.mu_correct
            )));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(SyntheticError::InvalidParameter(format!(
                "sigma must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Shape of the per-step difficulty sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DifficultyProfile {
    /// Same difficulty at every step.
    Constant { d: f64 },
    /// Linear interpolation from `lo` at the first step to `hi` at the
    /// last.
    Ramp { lo: f64, hi: f64 },
    /// `base` everywhere except one step of difficulty `spike` at the
    /// given relative position in `[0, 1]`.
    Spike { base: f64, spike: f64, position: f64 },
}

impl DifficultyProfile {
    fn slug(&self) -> String {
        match self {
            DifficultyProfile::Constant { d } => format!("const{d:.2}"),
            DifficultyProfile::Ramp { lo, hi } => format!("ramp{lo:.2}-{hi:.2}"),
            DifficultyProfile::Spike {
                base,
                spike,
                position,
            } => format!("spike{base:.2}-{spike:.2}@{position:.2}"),
        }
    }

    fn params(&self) -> Vec<f64> {
        match *self {
            DifficultyProfile::Constant { d } => vec![d],
            DifficultyProfile::Ramp { lo, hi } => vec![lo, hi],
            DifficultyProfile::Spike {
                base,
                spike,
                position,
            } => vec![base, spike, position],
        }
    }

    /// Index (0-based) of the spiked step for `n` steps, `None` for other
    /// profiles.
    pub fn spike_index(&self, n_steps: usize) -> Option<usize> {
        match *self {
            DifficultyProfile::Spike { position, .. } => {
                Some(((position * n_steps as f64).floor() as usize).min(n_steps - 1))
            }
            _ => None,
        }
    }
}

/// One synthetic problem: a difficulty per step, a canonical answer, and
/// the flat per-candidate token cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProblem {
    pub id: String,
    pub difficulties: Vec<f64>,
    pub answer: String,
    pub tokens_per_candidate: u64,
}

impl SyntheticProblem {
    pub fn n_steps(&self) -> usize {
        self.difficulties.len()
    }

    /// View as an engine problem.
    pub fn to_problem(&self) -> Problem {
        Problem {
            id: self.id.clone(),
            question: format!(
                "synthetic reasoning task {} ({} steps)",
                self.id,
                self.n_steps()
            ),
            answer: self.answer.clone(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SyntheticError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("analytic accuracy requires sigma = 0 (got {0}); use the Monte Carlo oracle instead")]
    SigmaNotZero(f64),
}

/// Build a problem deterministically from `(seed, profile, n_steps)`.
pub fn gen_problem(
    seed: u64,
    profile: &DifficultyProfile,
    n_steps: usize,
) -> Result<SyntheticProblem, SyntheticError> {
    if n_steps < 1 {
        return Err(SyntheticError::InvalidParameter(
            "n_steps must be >= 1".to_string(),
        ));
    }
    for p in profile.params() {
        if !(0.0..=1.0).contains(&p) {
            return Err(SyntheticError::InvalidParameter(format!(
                "profile parameter {p} outside [0, 1]"
            )));
        }
    }
    let difficulties: Vec<f64> = match *profile {
        DifficultyProfile::Constant { d } => vec![d; n_steps],
        DifficultyProfile::Ramp { lo, hi } => (0..n_steps)
            .map(|i| {
                if n_steps == 1 {
                    lo
                } else {
                    lo + (hi - lo) * i as f64 / (n_steps - 1) as f64
                }
            })
            .collect(),
        DifficultyProfile::Spike { base, spike, .. } => {
            let idx = profile.spike_index(n_steps).expect("spike profile");
            let mut d = vec![base; n_steps];
            d[idx] = spike;
            d
        }
    };
    let tag = stable_hash64(&[
        &seed.to_le_bytes(),
        &(n_steps as u64).to_le_bytes(),
        profile.slug().as_bytes(),
    ]);
    Ok(SyntheticProblem {
        id: format!("{}-n{}-{:08x}", profile.slug(), n_steps, seed),
        difficulties,
        answer: format!("{}", 1000 + tag % 9000),
        tokens_per_candidate: 30,
    })
}

/// One candidate draw at difficulty `d`: a Bernoulli(1 − d) correctness
/// flag and a score from the matching normal, clamped to `[0, 1]`.
pub fn candidate_draw(d: f64, noise: &NoiseModel, rng: &mut dyn RngCore) -> (bool, f64) {
    let mut rng = rng;
    let is_correct = rng.random_bool(1.0 - d);
    let mu = if is_correct {
        noise.mu_correct
    } else {
        noise.mu_incorrect
    };
    let score = if noise.sigma == 0.0 {
        mu
    } else {
        Normal::new(mu, noise.sigma)
            .expect("validated noise model")
            .sample(&mut rng)
    };
    (is_correct, score.clamp(0.0, 1.0))
}

const OK_TAG: &str = "[ok]";
const BAD_TAG: &str = "[bad]";

/// Deterministic simulator implementing both the generator and the scorer.
#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    problems: BTreeMap<String, SyntheticProblem>,
    noise: NoiseModel,
}

impl SyntheticWorld {
    pub fn new(noise: NoiseModel) -> Self {
        Self {
            problems: BTreeMap::new(),
            noise,
        }
    }

    pub fn with_problems(
        problems: impl IntoIterator<Item = SyntheticProblem>,
        noise: NoiseModel,
    ) -> Self {
        let mut world = Self::new(noise);
        for p in problems {
            world.insert(p);
        }
        world
    }

    pub fn insert(&mut self, problem: SyntheticProblem) {
        self.problems.insert(problem.id.clone(), problem);
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn problems(&self) -> impl Iterator<Item = &SyntheticProblem> {
        self.problems.values()
    }

    fn problem(&self, id: &str) -> Result<&SyntheticProblem, ModelError> {
        self.problems
            .get(id)
            .ok_or_else(|| ModelError::UnknownProblem(id.to_string()))
    }
}

impl StepGenerator for SyntheticWorld {
    fn generate(
        &self,
        ctx: &StepContext<'_>,
        n: usize,
        _temperature: f64,
        seed: u64,
    ) -> Result<Vec<GeneratedStep>, ModelError> {
        let problem = self.problem(ctx.problem_id)?;
        let n_steps = problem.n_steps();
        let step = ctx.step_index.min(n_steps);
        let prefix_broken = ctx.accepted_steps.iter().any(|s| s.contains(BAD_TAG));
        let difficulty = if prefix_broken {
            1.0
        } else {
            problem.difficulties[step - 1]
        };
        let terminal = ctx.step_index >= n_steps;

        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            let mut rng = ChaCha8Rng::seed_from_u64(master.next_u64());
            let (is_correct, score) = candidate_draw(difficulty, &self.noise, &mut rng);
            let tag = if is_correct { OK_TAG } else { BAD_TAG };
            let mut text = format!(
                "{} step {}/{} cand {} {} score {:.6}",
                problem.id, ctx.step_index, n_steps, j, tag, score
            );
            if terminal {
                let answer = if is_correct { &problem.answer } else { "wrong" };
                text.push_str(&format!(" \\boxed{{{answer}}}"));
            }
            out.push(GeneratedStep {
                text,
                tokens: problem.tokens_per_candidate,
            });
        }
        Ok(out)
    }
}

impl StepScorer for SyntheticWorld {
    fn score(&self, _ctx: &StepContext<'_>, candidate: &str) -> Result<f64, ModelError> {
        let mut words = candidate.split_whitespace();
        while let Some(w) = words.next() {
            if w == "score" {
                let value: f64 = words
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| {
                        ModelError::MalformedResponse(format!(
                            "candidate lacks a parsable score: {candidate}"
                        ))
                    })?;
                return Ok(value.clamp(0.0, 1.0));
            }
        }
        Err(ModelError::MalformedResponse(format!(
            "candidate lacks a score field: {candidate}"
        )))
    }
}

/// Was this candidate drawn correct? Reads the self-describing tag.
pub fn candidate_is_correct(text: &str) -> bool {
    text.contains(OK_TAG)
}

/// Closed-form accuracy of a fixed width-`w` search on `problem` when
/// scores separate perfectly (`sigma = 0`): `Π_i (1 − d_i^w)`. An episode
/// is correct iff every step selects a correct candidate.
pub fn analytic_accuracy(
    problem: &SyntheticProblem,
    width: usize,
    sigma: f64,
) -> Result<f64, SyntheticError> {
    if sigma != 0.0 {
        return Err(SyntheticError::SigmaNotZero(sigma));
    }
    if width < 1 {
        return Err(SyntheticError::InvalidParameter(
            "width must be >= 1".to_string(),
        ));
    }
    Ok(problem
        .difficulties
        .iter()
        .map(|&d| 1.0 - d.powi(width as i32))
        .product())
}

/// Monte Carlo reference: run the real engine `n_episodes` times with
/// derived seeds and return `(mean accuracy, mean total tokens)`.
pub fn mc_oracle(
    problem: &SyntheticProblem,
    strategy: &Strategy,
    config: &SearchConfig,
    noise: &NoiseModel,
    n_episodes: usize,
    seed: u64,
) -> Result<(f64, f64), Box<EpisodeError>> {
    let world = SyntheticWorld::with_problems([problem.clone()], *noise);
    let engine_problem = problem.to_problem();
    let mut correct = 0usize;
    let mut tokens = 0u64;
    for i in 0..n_episodes {
        let trace = run_episode(
            &engine_problem,
            strategy,
            &world,
            &world,
            config,
            derive_seed(seed, i as u64),
        )
        .map_err(Box::new)?;
        correct += trace.correct as usize;
        tokens += trace.total_tokens;
    }
    Ok((
        correct as f64 / n_episodes as f64,
        tokens as f64 / n_episodes as f64,
    ))
}

/// Per-step correctness conjunction read back from a trace's selected
/// candidates. Equals `trace.correct` in the synthetic world.
pub fn trace_conjunction(trace: &ReasoningTrace) -> bool {
    trace
        .steps
        .iter()
        .all(|s| candidate_is_correct(&s.effective_candidate().text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::{fixed_strategy, pats_strategy};
    use crate::search::ThinkingMode;

    #[test]
    fn profiles_produce_documented_difficulties() {
        let p = gen_problem(1, &DifficultyProfile::Constant { d: 0.5 }, 4).unwrap();
        assert_eq!(p.difficulties, vec![0.5, 0.5, 0.5, 0.5]);

        let p = gen_problem(1, &DifficultyProfile::Ramp { lo: 0.0, hi: 1.0 }, 3).unwrap();
        assert_eq!(p.difficulties, vec![0.0, 0.5, 1.0]);

        let p = gen_problem(
            1,
            &DifficultyProfile::Spike {
                base: 0.2,
                spike: 0.9,
                position: 0.5,
            },
            5,
        )
        .unwrap();
        assert_eq!(p.difficulties, vec![0.2, 0.2, 0.9, 0.2, 0.2]);
        assert_eq!(p.tokens_per_candidate, 30);
    }

    #[test]
    fn gen_problem_is_deterministic_and_validates() {
        let profile = DifficultyProfile::Ramp { lo: 0.1, hi: 0.9 };
        let a = gen_problem(7, &profile, 6).unwrap();
        let b = gen_problem(7, &profile, 6).unwrap();
        assert_eq!(a, b);
        let c = gen_problem(8, &profile, 6).unwrap();
        assert_ne!(a.id, c.id);

        assert!(gen_problem(1, &DifficultyProfile::Constant { d: 1.2 }, 3).is_err());
        assert!(gen_problem(1, &DifficultyProfile::Constant { d: 0.5 }, 0).is_err());
    }

    #[test]
    fn candidate_draw_degenerate_cases() {
        let noise = NoiseModel::with_sigma(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            assert_eq!(candidate_draw(0.0, &noise, &mut rng), (true, 0.9));
            assert_eq!(candidate_draw(1.0, &noise, &mut rng), (false, 0.3));
        }
    }

    #[test]
    fn candidate_draw_frequency_matches_difficulty() {
        let noise = NoiseModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let correct = (0..n)
            .filter(|_| candidate_draw(0.5, &noise, &mut rng).0)
            .count();
        let frac = correct as f64 / n as f64;
        assert!(
            (0.485..=0.515).contains(&frac),
            "correct fraction {frac} outside binomial interval"
        );
    }

    #[test]
    fn generation_is_deterministic_in_seed() {
        let problem = gen_problem(2, &DifficultyProfile::Constant { d: 0.5 }, 4).unwrap();
        let world = SyntheticWorld::with_problems([problem.clone()], NoiseModel::default());
        let ctx = StepContext {
            problem_id: &problem.id,
            question: "q",
            accepted_steps: &[],
            step_index: 2,
        };
        let a = world.generate(&ctx, 8, 0.6, 3).unwrap();
        let b = world.generate(&ctx, 8, 0.6, 3).unwrap();
        assert_eq!(a, b);
        let c = world.generate(&ctx, 8, 0.6, 4).unwrap();
        assert_ne!(a, c);
        assert!(a.iter().all(|g| g.tokens == 30));
    }

    #[test]
    fn unknown_problem_is_rejected() {
        let world = SyntheticWorld::new(NoiseModel::default());
        let ctx = StepContext {
            problem_id: "nope",
            question: "q",
            accepted_steps: &[],
            step_index: 1,
        };
        assert!(matches!(
            world.generate(&ctx, 2, 0.6, 0),
            Err(ModelError::UnknownProblem(_))
        ));
    }

    #[test]
    fn scorer_reads_back_encoded_score() {
        let problem = gen_problem(2, &DifficultyProfile::Constant { d: 0.0 }, 2).unwrap();
        let world = SyntheticWorld::with_problems([problem.clone()], NoiseModel::with_sigma(0.0));
        let ctx = StepContext {
            problem_id: &problem.id,
            question: "q",
            accepted_steps: &[],
            step_index: 1,
        };
        let generated = world.generate(&ctx, 4, 0.6, 9).unwrap();
        for g in &generated {
            assert_eq!(world.score(&ctx, &g.text).unwrap(), 0.9);
        }
        assert!(world.score(&ctx, "unstructured text").is_err());
    }

    #[test]
    fn broken_prefix_forces_incorrect_candidates() {
        let problem = gen_problem(2, &DifficultyProfile::Constant { d: 0.0 }, 3).unwrap();
        let world = SyntheticWorld::with_problems([problem.clone()], NoiseModel::with_sigma(0.0));
        let poisoned = vec![format!("{} step 1/3 cand 0 [bad] score 0.3", problem.id)];
        let ctx = StepContext {
            problem_id: &problem.id,
            question: "q",
            accepted_steps: &poisoned,
            step_index: 2,
        };
        let generated = world.generate(&ctx, 4, 0.6, 9).unwrap();
        assert!(generated.iter().all(|g| g.text.contains("[bad]")));
    }

    #[test]
    fn analytic_accuracy_closed_forms() {
        let p = SyntheticProblem {
            id: "t".into(),
            difficulties: vec![0.5, 0.5],
            answer: "1".into(),
            tokens_per_candidate: 30,
        };
        assert!((analytic_accuracy(&p, 2, 0.0).unwrap() - 0.5625).abs() < 1e-12);
        let w8 = (1.0 - 0.5f64.powi(8)).powi(2);
        assert!((analytic_accuracy(&p, 8, 0.0).unwrap() - w8).abs() < 1e-12);
        assert!(analytic_accuracy(&p, 64, 0.0).unwrap() > 0.999_999);

        let absorbing = SyntheticProblem {
            difficulties: vec![0.3, 1.0],
            ..p.clone()
        };
        assert_eq!(analytic_accuracy(&absorbing, 8, 0.0).unwrap(), 0.0);

        assert_eq!(
            analytic_accuracy(&p, 2, 0.05),
            Err(SyntheticError::SigmaNotZero(0.05))
        );
    }

    #[test]
    fn mc_oracle_trivial_problem_is_exact() {
        // Difficulty 0 everywhere, sigma 0: scores saturate above
        // value_good, so modes walk complex -> medium -> simple and every
        // episode is correct with exactly (8+4+2+2+2)*30 = 540 tokens.
        let problem = gen_problem(5, &DifficultyProfile::Constant { d: 0.0 }, 5).unwrap();
        let cfg = SearchConfig::default();
        let strategy = pats_strategy(ThinkingMode::Complex);
        let noise = NoiseModel::with_sigma(0.0);
        let (acc, tokens) = mc_oracle(&problem, &strategy, &cfg, &noise, 20, 1).unwrap();
        assert_eq!(acc, 1.0);
        assert_eq!(tokens, 540.0);

        let world = SyntheticWorld::with_problems([problem.clone()], noise);
        let trace = run_episode(
            &problem.to_problem(),
            &strategy,
            &world,
            &world,
            &cfg,
            42,
        )
        .unwrap();
        let modes: Vec<_> = trace.steps.iter().map(|s| s.mode).collect();
        assert_eq!(
            modes,
            vec![
                ThinkingMode::Complex,
                ThinkingMode::Medium,
                ThinkingMode::Simple,
                ThinkingMode::Simple,
                ThinkingMode::Simple
            ]
        );
    }

    #[test]
    fn mc_oracle_impossible_problem_scores_zero() {
        let problem = gen_problem(5, &DifficultyProfile::Constant { d: 1.0 }, 1).unwrap();
        let cfg = SearchConfig::default();
        let noise = NoiseModel::with_sigma(0.0);
        for strategy in [
            fixed_strategy(ThinkingMode::Simple),
            pats_strategy(ThinkingMode::Complex),
        ] {
            let (acc, _) = mc_oracle(&problem, &strategy, &cfg, &noise, 50, 2).unwrap();
            assert_eq!(acc, 0.0);
        }
    }

    #[test]
    fn fixed_width_tokens_are_exact_without_penalty() {
        // Fixed strategies never penalize, so mean tokens are exactly
        // n_steps * w * tokens_per_candidate.
        let problem = gen_problem(6, &DifficultyProfile::Constant { d: 0.5 }, 2).unwrap();
        let cfg = SearchConfig::default();
        let noise = NoiseModel::with_sigma(0.0);
        let (_, tokens) = mc_oracle(
            &problem,
            &fixed_strategy(ThinkingMode::Simple),
            &cfg,
            &noise,
            100,
            3,
        )
        .unwrap();
        assert_eq!(tokens, 120.0);
    }

    #[test]
    fn correctness_equals_per_step_conjunction() {
        let problem = gen_problem(8, &DifficultyProfile::Constant { d: 0.4 }, 4).unwrap();
        let world = SyntheticWorld::with_problems([problem.clone()], NoiseModel::default());
        let cfg = SearchConfig::default();
        let strategy = pats_strategy(ThinkingMode::Complex);
        for seed in 0..50 {
            let trace = run_episode(
                &problem.to_problem(),
                &strategy,
                &world,
                &world,
                &cfg,
                seed,
            )
            .unwrap();
            assert_eq!(trace.correct, trace_conjunction(&trace), "seed {seed}");
        }
    }

    #[test]
    fn mc_oracle_converges_to_analytic_accuracy() {
        let problem = gen_problem(4, &DifficultyProfile::Constant { d: 0.5 }, 2).unwrap();
        let cfg = SearchConfig::default();
        let noise = NoiseModel::with_sigma(0.0);
        let (acc, _) = mc_oracle(
            &problem,
            &fixed_strategy(ThinkingMode::Simple),
            &cfg,
            &noise,
            2000,
            7,
        )
        .unwrap();
        let truth = analytic_accuracy(&problem, 2, 0.0).unwrap();
        assert!(
            (acc - truth).abs() <= 0.02,
            "estimate {acc} vs closed form {truth}"
        );
    }
}
