//! Search configuration: widths, reward thresholds, penalty behavior,
//! and termination settings.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::search::ThinkingMode;

/// What happens when a committed step scores below `value_bad`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyPolicy {
    /// Redo the step once at the widest width.
    Once,
    /// Leave bad steps as they are.
    Never,
    /// Keep redoing the step until it clears `value_bad` or the iteration
    /// cap is reached.
    UntilThreshold,
}

/// Which candidates are eligible when re-selecting a penalized step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltySelectionPool {
    /// Select among the regenerated candidates only.
    FreshOnly,
    /// Select over the original candidates plus everything regenerated.
    Union,
}

/// A rule for detecting that a step carries the final answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerMarker {
    /// The step text contains this substring anywhere.
    Substring(String),
    /// Some line of the step text starts with this prefix.
    LinePrefix(String),
}

impl AnswerMarker {
    pub fn matches(&self, text: &str) -> bool {
        match self {
            AnswerMarker::Substring(s) => text.contains(s.as_str()),
            AnswerMarker::LinePrefix(p) => text.lines().any(|l| l.trim_start().starts_with(p.as_str())),
        }
    }
}

/// Tunable surface of an experiment: candidate widths per mode, reward
/// thresholds, penalty behavior, and termination settings.
///
/// The defaults reproduce the canonical setting: widths 2/4/8,
/// `value_good`/`value_low`/`value_bad` = 0.85/0.75/0.40, complex start,
/// sampling temperature 0.6, one penalty per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Candidates generated per step in simple mode.
    pub width_simple: usize,
    /// Candidates generated per step in medium mode.
    pub width_medium: usize,
    /// Candidates generated per step in complex mode.
    pub width_complex: usize,
    /// At or above this score the next step switches one mode simpler.
    pub value_good: f64,
    /// Below this score the next step jumps to complex.
    pub value_low: f64,
    /// Below this score the current step itself is penalized (redone).
    pub value_bad: f64,
    /// Mode of the first step for the adaptive strategy.
    pub initial_mode: ThinkingMode,
    /// Hard cap on committed steps per episode.
    pub max_steps: usize,
    /// Sampling temperature passed to the step generator.
    pub temperature: f64,
    pub penalty_policy: PenaltyPolicy,
    /// Iteration cap for [`PenaltyPolicy::UntilThreshold`].
    pub penalty_iteration_cap: usize,
    pub penalty_selection_pool: PenaltySelectionPool,
    /// Rules that mark a step as answer-bearing.
    pub answer_markers: Vec<AnswerMarker>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            width_simple: 2,
            width_medium: 4,
            width_complex: 8,
            value_good: 0.85,
            value_low: 0.75,
            value_bad: 0.40,
            initial_mode: ThinkingMode::Complex,
            max_steps: 40,
            temperature: 0.6,
            penalty_policy: PenaltyPolicy::Once,
            penalty_iteration_cap: 20,
            penalty_selection_pool: PenaltySelectionPool::FreshOnly,
            answer_markers: default_answer_markers(),
        }
    }
}

fn default_answer_markers() -> Vec<AnswerMarker> {
    vec![
        AnswerMarker::Substring("\\boxed{".to_string()),
        AnswerMarker::LinePrefix("Final Answer".to_string()),
    ]
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("thresholds must satisfy 0 <= value_bad < value_low <= value_good <= 1 (got bad={bad}, low={low}, good={good})")]
    BadThresholds { bad: f64, low: f64, good: f64 },
    #[error("widths must satisfy 1 <= width_simple <= width_medium <= width_complex (got {simple}/{medium}/{complex})")]
    BadWidths {
        simple: usize,
        medium: usize,
        complex: usize,
    },
    #[error("max_steps must be >= 1")]
    BadMaxSteps,
    #[error("temperature must be finite and >= 0 (got {0})")]
    BadTemperature(f64),
    #[error("penalty_iteration_cap must be >= 1")]
    BadPenaltyCap,
}

impl SearchConfig {
    /// Candidate count for a mode under this config.
    pub fn width_of(&self, mode: ThinkingMode) -> usize {
        match mode {
            ThinkingMode::Simple => self.width_simple,
            ThinkingMode::Medium => self.width_medium,
            ThinkingMode::Complex => self.width_complex,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let ok = 0.0 <= self.value_bad
            && self.value_bad < self.value_low
            && self.value_low <= self.value_good
            && self.value_good <= 1.0;
        if !ok {
            return Err(ConfigError::BadThresholds {
                bad: self.value_bad,
                low: self.value_low,
                good: self.value_good,
            });
        }
        if !(1 <= self.width_simple
            && self.width_simple <= self.width_medium
            && self.width_medium <= self.width_complex)
        {
            return Err(ConfigError::BadWidths {
                simple: self.width_simple,
                medium: self.width_medium,
                complex: self.width_complex,
            });
        }
        if self.max_steps < 1 {
            return Err(ConfigError::BadMaxSteps);
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(ConfigError::BadTemperature(self.temperature));
        }
        if self.penalty_iteration_cap < 1 {
            return Err(ConfigError::BadPenaltyCap);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_canonical_setting() {
        let cfg = SearchConfig::default();
        assert_eq!(cfg.width_simple, 2);
        assert_eq!(cfg.width_medium, 4);
        assert_eq!(cfg.width_complex, 8);
        assert_eq!(cfg.value_good, 0.85);
        assert_eq!(cfg.value_low, 0.75);
        assert_eq!(cfg.value_bad, 0.40);
        assert_eq!(cfg.initial_mode, ThinkingMode::Complex);
        assert_eq!(cfg.max_steps, 40);
        assert_eq!(cfg.temperature, 0.6);
        assert_eq!(cfg.penalty_policy, PenaltyPolicy::Once);
        assert_eq!(cfg.penalty_iteration_cap, 20);
        assert_eq!(cfg.penalty_selection_pool, PenaltySelectionPool::FreshOnly);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_threshold_disorder() {
        let cfg = SearchConfig {
            value_bad: 0.8,
            value_low: 0.75,
            ..Default::default()
        };
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::BadThresholds { .. })
        ));

        // value_low == value_good is allowed, value_bad == value_low is not.
        let cfg = SearchConfig {
            value_low: 0.85,
            ..Default::default()
        };
        cfg.validate().unwrap();
        let cfg = SearchConfig {
            value_bad: 0.75,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_width_disorder() {
        let cfg = SearchConfig {
            width_medium: 1,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(ConfigError::BadWidths { .. })));
        let cfg = SearchConfig {
            width_simple: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn partial_document_uses_defaults() {
        let cfg: SearchConfig =
            serde_json::from_str(r#"{"width_simple": 3, "width_medium": 3}"#).unwrap();
        assert_eq!(cfg.width_simple, 3);
        assert_eq!(cfg.width_medium, 3);
        assert_eq!(cfg.width_complex, 8);
        assert_eq!(cfg.value_good, 0.85);
    }

    #[test]
    fn answer_marker_rules() {
        let boxed = AnswerMarker::Substring("\\boxed{".into());
        assert!(boxed.matches("therefore \\boxed{42}"));
        assert!(!boxed.matches("no marker"));

        let line = AnswerMarker::LinePrefix("Final Answer".into());
        assert!(line.matches("steps...\nFinal Answer: 7"));
        assert!(line.matches("  Final Answer 7"));
        assert!(!line.matches("the Final Answer is inline"));
    }
}
