//! Evaluation quantities computed from traces: per-benchmark accuracy and
//! token averages, unweighted macro-averages across benchmarks, and the
//! stage-normalized thinking-mode distribution.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::search::{ReasoningTrace, ThinkingMode};

/// The per-episode numbers aggregation needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeStat {
    pub benchmark: String,
    pub strategy: String,
    pub correct: bool,
    pub total_tokens: u64,
}

impl EpisodeStat {
    pub fn from_trace(benchmark: &str, trace: &ReasoningTrace) -> Self {
        Self {
            benchmark: benchmark.to_string(),
            strategy: trace.strategy_name.clone(),
            correct: trace.correct,
            total_tokens: trace.total_tokens,
        }
    }
}

/// Mean correctness and mean token usage of one (benchmark, strategy)
/// group. `accuracy` is a fraction in `[0, 1]`; tables render it as a
/// percentage with one decimal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub benchmark: String,
    pub strategy: String,
    #[serde(rename = "n")]
    pub n_problems: usize,
    pub accuracy: f64,
    pub avg_tokens: f64,
}

/// Benchmark name reserved for macro-average rows.
pub const AVERAGE_BENCHMARK: &str = "average";

/// Per-benchmark rows plus one macro-average row per strategy, in
/// presentation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// Benchmarks in first-seen order.
    pub benchmarks: Vec<String>,
    /// Strategies in first-seen order.
    pub strategies: Vec<String>,
    /// One row per (strategy, benchmark).
    pub rows: Vec<BenchmarkResult>,
    /// One unweighted macro-average row per strategy
    /// (`benchmark == "average"`).
    pub averages: Vec<BenchmarkResult>,
}

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("no episodes to aggregate")]
    EmptyInput,
    #[error("duplicate result row for benchmark '{benchmark}', strategy '{strategy}'")]
    DuplicateRow { benchmark: String, strategy: String },
    #[error("strategy '{strategy}' is missing benchmark '{benchmark}'")]
    MissingBenchmark { strategy: String, benchmark: String },
    #[error("benchmark name '{0}' is reserved for macro-average rows")]
    ReservedBenchmarkName(String),
    #[error("num_stages must be >= 1")]
    BadStageCount,
    #[error("no traces left after filtering")]
    AllTracesFiltered,
}

/// Group episodes by (benchmark, strategy) and compute per-group mean
/// correctness and mean tokens, plus an unweighted macro-average row per
/// strategy. Permutation-invariant over the input.
pub fn aggregate(stats: &[EpisodeStat]) -> Result<Comparison, AnalysisError> {
    if stats.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mut benchmarks: Vec<String> = Vec::new();
    let mut strategies: Vec<String> = Vec::new();
    let mut groups: BTreeMap<(String, String), (usize, usize, u64)> = BTreeMap::new();
    for stat in stats {
        if stat.benchmark == AVERAGE_BENCHMARK {
            return Err(AnalysisError::ReservedBenchmarkName(stat.benchmark.clone()));
        }
        if !benchmarks.contains(&stat.benchmark) {
            benchmarks.push(stat.benchmark.clone());
        }
        if !strategies.contains(&stat.strategy) {
            strategies.push(stat.strategy.clone());
        }
        let entry = groups
            .entry((stat.strategy.clone(), stat.benchmark.clone()))
            .or_insert((0, 0, 0));
        entry.0 += 1;
        entry.1 += stat.correct as usize;
        entry.2 += stat.total_tokens;
    }
    let mut rows = Vec::new();
    for strategy in &strategies {
        for benchmark in &benchmarks {
            if let Some(&(n, correct, tokens)) =
                groups.get(&(strategy.clone(), benchmark.clone()))
            {
                rows.push(BenchmarkResult {
                    benchmark: benchmark.clone(),
                    strategy: strategy.clone(),
                    n_problems: n,
                    accuracy: correct as f64 / n as f64,
                    avg_tokens: tokens as f64 / n as f64,
                });
            }
        }
    }
    compare_report(rows)
}

/// Unweighted mean over per-benchmark rows: each benchmark contributes
/// equally regardless of its problem count.
pub fn macro_average(strategy: &str, rows: &[BenchmarkResult]) -> BenchmarkResult {
    let k = rows.len().max(1) as f64;
    BenchmarkResult {
        benchmark: AVERAGE_BENCHMARK.to_string(),
        strategy: strategy.to_string(),
        n_problems: rows.iter().map(|r| r.n_problems).sum(),
        accuracy: rows.iter().map(|r| r.accuracy).sum::<f64>() / k,
        avg_tokens: rows.iter().map(|r| r.avg_tokens).sum::<f64>() / k,
    }
}

/// Assemble per-benchmark rows from one or more strategies into a
/// comparison: validates that every strategy covers the same benchmark set
/// and appends the macro-average row per strategy.
pub fn compare_report(rows: Vec<BenchmarkResult>) -> Result<Comparison, AnalysisError> {
    if rows.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mut benchmarks: Vec<String> = Vec::new();
    let mut strategies: Vec<String> = Vec::new();
    let mut seen: BTreeMap<(String, String), bool> = BTreeMap::new();
    for row in &rows {
        if row.benchmark == AVERAGE_BENCHMARK {
            return Err(AnalysisError::ReservedBenchmarkName(row.benchmark.clone()));
        }
        if !benchmarks.contains(&row.benchmark) {
            benchmarks.push(row.benchmark.clone());
        }
        if !strategies.contains(&row.strategy) {
            strategies.push(row.strategy.clone());
        }
        if seen
            .insert((row.strategy.clone(), row.benchmark.clone()), true)
            .is_some()
        {
            return Err(AnalysisError::DuplicateRow {
                benchmark: row.benchmark.clone(),
                strategy: row.strategy.clone(),
            });
        }
    }
    for strategy in &strategies {
        for benchmark in &benchmarks {
            if !seen.contains_key(&(strategy.clone(), benchmark.clone())) {
                return Err(AnalysisError::MissingBenchmark {
                    strategy: strategy.clone(),
                    benchmark: benchmark.clone(),
                });
            }
        }
    }
    let averages = strategies
        .iter()
        .map(|s| {
            let mine: Vec<BenchmarkResult> = rows
                .iter()
                .filter(|r| &r.strategy == s)
                .cloned()
                .collect();
            macro_average(s, &mine)
        })
        .collect();
    Ok(Comparison {
        benchmarks,
        strategies,
        rows,
        averages,
    })
}

impl Comparison {
    fn row(&self, strategy: &str, benchmark: &str) -> Option<&BenchmarkResult> {
        self.rows
            .iter()
            .find(|r| r.strategy == strategy && r.benchmark == benchmark)
    }

    /// Fixed-width text table: accuracy (percent, 1 decimal, higher is
    /// better) and mean tokens (1 decimal, lower is better) per benchmark,
    /// then the macro-average pair.
    pub fn render_text(&self) -> String {
        let name_width = self
            .strategies
            .iter()
            .map(|s| s.len())
            .chain(["strategy".len()])
            .max()
            .unwrap_or(8);
        let mut out = String::new();
        out.push_str(&format!("{:<name_width$}", "strategy"));
        for b in self.benchmarks.iter().chain([&AVERAGE_BENCHMARK.to_string()]) {
            out.push_str(&format!(" | {:>18}", b));
        }
        out.push('\n');
        out.push_str(&format!("{:<name_width$}", ""));
        for _ in 0..=self.benchmarks.len() {
            out.push_str(&format!(" | {:>8} {:>9}", "acc", "tokens"));
        }
        out.push('\n');
        for strategy in &self.strategies {
            out.push_str(&format!("{strategy:<name_width$}"));
            let avg = self
                .averages
                .iter()
                .find(|r| &r.strategy == strategy)
                .expect("average row exists per strategy");
            for result in self
                .benchmarks
                .iter()
                .map(|b| self.row(strategy, b).expect("validated complete grid"))
                .chain([avg])
            {
                out.push_str(&format!(
                    " | {:>8.1} {:>9.1}",
                    result.accuracy * 100.0,
                    result.avg_tokens
                ));
            }
            out.push('\n');
        }
        out
    }
}

/// Proportion of steps per mode inside one stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageModeShare {
    pub steps: usize,
    pub simple: f64,
    pub medium: f64,
    pub complex: f64,
}

impl StageModeShare {
    pub fn proportion(&self, mode: ThinkingMode) -> f64 {
        match mode {
            ThinkingMode::Simple => self.simple,
            ThinkingMode::Medium => self.medium,
            ThinkingMode::Complex => self.complex,
        }
    }
}

/// Mode proportions per normalized reasoning stage, pooled over traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDistribution {
    pub stages: Vec<StageModeShare>,
    /// Traces that contributed after filtering.
    pub n_traces: usize,
}

/// Stage of the 1-based step `index` in an `n_steps`-long trace: left-closed
/// buckets `floor(num_stages * (index - 1) / n_steps)`, with the final
/// stage clamped.
pub fn stage_of(index: usize, n_steps: usize, num_stages: usize) -> usize {
    ((num_stages * (index - 1)) / n_steps).min(num_stages - 1)
}

/// Pool steps from `traces` into `num_stages` equal stages of the
/// normalized step index and report each stage's mode proportions.
///
/// A penalized step counts as complex — it was redone at the widest
/// setting. With `only_correct` (the default analysis view) only correct
/// episodes contribute.
pub fn stage_distribution<'a>(
    traces: impl IntoIterator<Item = &'a ReasoningTrace>,
    num_stages: usize,
    only_correct: bool,
) -> Result<StageDistribution, AnalysisError> {
    if num_stages < 1 {
        return Err(AnalysisError::BadStageCount);
    }
    let mut counts = vec![[0usize; 3]; num_stages];
    let mut n_traces = 0usize;
    for trace in traces {
        if only_correct && !trace.correct {
            continue;
        }
        n_traces += 1;
        let n = trace.steps.len();
        for step in &trace.steps {
            let stage = stage_of(step.index, n, num_stages);
            let mode_idx = match step.effective_mode() {
                ThinkingMode::Simple => 0,
                ThinkingMode::Medium => 1,
                ThinkingMode::Complex => 2,
            };
            counts[stage][mode_idx] += 1;
        }
    }
    if n_traces == 0 {
        return Err(AnalysisError::AllTracesFiltered);
    }
    let stages = counts
        .iter()
        .map(|c| {
            let total = c.iter().sum::<usize>();
            if total == 0 {
                StageModeShare {
                    steps: 0,
                    simple: 0.0,
                    medium: 0.0,
                    complex: 0.0,
                }
            } else {
                StageModeShare {
                    steps: total,
                    simple: c[0] as f64 / total as f64,
                    medium: c[1] as f64 / total as f64,
                    complex: c[2] as f64 / total as f64,
                }
            }
        })
        .collect();
    Ok(StageDistribution { stages, n_traces })
}
