//! HTTP clients for real models: an OpenAI-compatible chat-completions
//! generator and a minimal JSON scoring endpoint for reward models.
//!
//! Generation issues one request per step with the candidate count in the
//! `n` field (`{model, messages, n, temperature, stop}`); backends without
//! `n` support can be driven with `use_n_parameter = false`, which issues
//! `n` single-completion calls instead. Scoring posts
//! `{problem, steps, candidate}` and reads `{score}`, clamped to `[0, 1]`.
//!
//! Transient failures (connection errors, timeouts, HTTP 429/5xx) are
//! retried with the configured backoff schedule; a request is only retried
//! when no success response was consumed. Authentication failures and other
//! 4xx responses are not retried.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::model::{GeneratedStep, ModelError, StepGenerator, StepScorer};
use crate::search::StepContext;

/// Default name of the environment variable holding the API key.
pub const DEFAULT_API_KEY_ENV: &str = "PATS_API_KEY";

const DEFAULT_SYSTEM_PROMPT: &str = "Solve the problem step by step. Continue from the steps \
given so far and write exactly one next reasoning step, then stop. Separate steps with a blank \
line. When the final answer is ready, state it as \\boxed{...}.";

/// Connection settings for one model server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteEndpointConfig {
    /// Server root; generation posts to `{base_url}/v1/chat/completions`.
    pub base_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub timeout_secs: u64,
    /// Retries after the first attempt.
    pub max_retries: u32,
    /// Backoff before retry k is the k-th entry (the last entry repeats).
    pub retry_backoff_ms: Vec<u64>,
    /// Scoring endpoint; defaults to `{base_url}/score`.
    pub score_url: Option<String>,
    /// Request all candidates in one call via the `n` field. When false,
    /// issues n single-completion calls instead.
    pub use_n_parameter: bool,
    pub system_prompt: String,
    /// Step delimiter, sent as the stop sequence.
    pub step_delimiter: String,
    /// Maximum in-flight requests across all episodes.
    pub max_in_flight: usize,
}

impl Default for RemoteEndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8000".to_string(),
            model_name: "default".to_string(),
            api_key_env: DEFAULT_API_KEY_ENV.to_string(),
            timeout_secs: 120,
            max_retries: 3,
            retry_backoff_ms: vec![250, 500, 1000],
            score_url: None,
            use_n_parameter: true,
            system_prompt: DEFAULT_SYSTEM_PROMPT.to_string(),
            step_delimiter: "\n\n".to_string(),
            max_in_flight: 8,
        }
    }
}

impl RemoteEndpointConfig {
    pub fn completions_url(&self) -> String {
        format!("{}/v1/chat/completions", self.base_url.trim_end_matches('/'))
    }

    pub fn scoring_url(&self) -> String {
        self.score_url
            .clone()
            .unwrap_or_else(|| format!("{}/score", self.base_url.trim_end_matches('/')))
    }

    /// Resolve the API key from the configured environment variable.
    pub fn api_key(&self) -> Result<String, ModelError> {
        std::env::var(&self.api_key_env).map_err(|_| {
            ModelError::Auth(format!(
                "environment variable {} is not set",
                self.api_key_env
            ))
        })
    }

    fn backoff(&self, retry_index: u32) -> Duration {
        let ms = self
            .retry_backoff_ms
            .get(retry_index as usize)
            .or(self.retry_backoff_ms.last())
            .copied()
            .unwrap_or(0);
        Duration::from_millis(ms)
    }
}

/// Counting semaphore bounding concurrent requests to one backend.
#[derive(Debug)]
struct Limiter {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Limiter {
    fn new(permits: usize) -> Self {
        Self {
            permits: Mutex::new(permits.max(1)),
            available: Condvar::new(),
        }
    }

    fn acquire(&self) -> LimiterGuard<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.available.wait(permits).unwrap();
        }
        *permits -= 1;
        LimiterGuard { limiter: self }
    }
}

struct LimiterGuard<'a> {
    limiter: &'a Limiter,
}

impl Drop for LimiterGuard<'_> {
    fn drop(&mut self) {
        *self.limiter.permits.lock().unwrap() += 1;
        self.limiter.available.notify_one();
    }
}

#[derive(Serialize)]
struct ChatMessage {
    role: &'static str,
    content: String,
}

/// Exactly the fields the wire carries: model, messages, n, temperature,
/// stop.
#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage>,
    n: usize,
    temperature: f64,
    stop: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
    #[serde(default)]
    usage: Option<UsageInfo>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
    #[serde(default)]
    usage: Option<UsageInfo>,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    #[serde(default)]
    content: String,
}

#[derive(Deserialize)]
struct UsageInfo {
    #[serde(default)]
    completion_tokens: u64,
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    problem: &'a str,
    steps: &'a [String],
    candidate: &'a str,
}

#[derive(Deserialize)]
struct ScoreResponse {
    score: f64,
}

/// Blocking HTTP client implementing both the generator and the scorer.
/// Safe to share across parallel episodes; `max_in_flight` bounds backend
/// load.
pub struct RemoteClient {
    cfg: RemoteEndpointConfig,
    http: reqwest::blocking::Client,
    api_key: String,
    limiter: Limiter,
}

impl RemoteClient {
    /// Build a client, resolving the API key from the environment.
    pub fn new(cfg: RemoteEndpointConfig) -> Result<Self, ModelError> {
        let api_key = cfg.api_key()?;
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| ModelError::Transport(e.to_string()))?;
        Ok(Self {
            limiter: Limiter::new(cfg.max_in_flight),
            cfg,
            http,
            api_key,
        })
    }

    pub fn config(&self) -> &RemoteEndpointConfig {
        &self.cfg
    }

    /// POST a JSON body, retrying transient failures per the config.
    fn post_json(&self, url: &str, body: String) -> Result<String, ModelError> {
        let _permit = self.limiter.acquire();
        let mut last_failure = String::new();
        let attempts = self.cfg.max_retries + 1;
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.cfg.backoff(attempt - 1));
            }
            let sent = self
                .http
                .post(url)
                .bearer_auth(&self.api_key)
                .header(reqwest::header::CONTENT_TYPE, "application/json")
                .body(body.clone())
                .send();
            let response = match sent {
                Ok(r) => r,
                Err(e) => {
                    // Connection error or timeout: nothing was consumed.
                    last_failure = format!("transport: {e}");
                    continue;
                }
            };
            let status = response.status().as_u16();
            let text = response.text().unwrap_or_default();
            if (200..300).contains(&status) {
                return Ok(text);
            }
            if status == 401 || status == 403 {
                return Err(ModelError::Auth(format!("HTTP {status}: {text}")));
            }
            if status == 429 || (500..600).contains(&status) {
                last_failure = format!("HTTP {status}: {text}");
                continue;
            }
            return Err(ModelError::Rejected { status, body: text });
        }
        Err(ModelError::RetriesExhausted {
            attempts,
            last: last_failure,
        })
    }

    fn user_content(&self, ctx: &StepContext<'_>) -> String {
        if ctx.accepted_steps.is_empty() {
            ctx.question.to_string()
        } else {
            format!(
                "{}\n\n{}{}",
                ctx.question,
                ctx.accepted_steps.join(&self.cfg.step_delimiter),
                self.cfg.step_delimiter
            )
        }
    }

    fn request_body(&self, ctx: &StepContext<'_>, n: usize, temperature: f64) -> String {
        let request = ChatRequest {
            model: &self.cfg.model_name,
            messages: vec![
                ChatMessage {
                    role: "system",
                    content: self.cfg.system_prompt.clone(),
                },
                ChatMessage {
                    role: "user",
                    content: self.user_content(ctx),
                },
            ],
            n,
            temperature,
            stop: &self.cfg.step_delimiter,
        };
        serde_json::to_string(&request).expect("chat request serializes")
    }

    /// One completions call asking for `n` choices.
    fn completions_call(
        &self,
        ctx: &StepContext<'_>,
        n: usize,
        temperature: f64,
    ) -> Result<Vec<GeneratedStep>, ModelError> {
        let body = self.request_body(ctx, n, temperature);
        let text = self.post_json(&self.cfg.completions_url(), body)?;
        let parsed: ChatResponse = serde_json::from_str(&text)
            .map_err(|e| ModelError::MalformedResponse(format!("bad completions JSON: {e}")))?;
        if parsed.choices.len() != n {
            return Err(ModelError::MalformedResponse(format!(
                "requested {n} choices, got {}",
                parsed.choices.len()
            )));
        }
        Ok(assign_tokens(parsed))
    }
}

/// Token counts per candidate: per-choice usage when every choice reports
/// it, otherwise the response-level completion count split evenly across
/// choices (remainder to the earliest), otherwise whitespace-delimited
/// units of the text.
fn assign_tokens(response: ChatResponse) -> Vec<GeneratedStep> {
    let n = response.choices.len();
    let per_choice: Vec<Option<u64>> = response
        .choices
        .iter()
        .map(|c| c.usage.as_ref().map(|u| u.completion_tokens))
        .collect();
    let total = response.usage.map(|u| u.completion_tokens);
    response
        .choices
        .into_iter()
        .enumerate()
        .map(|(i, choice)| {
            let tokens = match (per_choice[i], total) {
                (Some(t), _) => t,
                (None, Some(total)) => {
                    let base = total / n as u64;
                    let remainder = total % n as u64;
                    base + ((i as u64) < remainder) as u64
                }
                (None, None) => choice.message.content.split_whitespace().count() as u64,
            };
            GeneratedStep {
                text: choice.message.content,
                tokens,
            }
        })
        .collect()
}

impl StepGenerator for RemoteClient {
    fn generate(
        &self,
        ctx: &StepContext<'_>,
        n: usize,
        temperature: f64,
        _seed: u64,
    ) -> Result<Vec<GeneratedStep>, ModelError> {
        if self.cfg.use_n_parameter {
            self.completions_call(ctx, n, temperature)
        } else {
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                out.extend(self.completions_call(ctx, 1, temperature)?);
            }
            Ok(out)
        }
    }
}

impl StepScorer for RemoteClient {
    fn score(&self, ctx: &StepContext<'_>, candidate: &str) -> Result<f64, ModelError> {
        let body = serde_json::to_string(&ScoreRequest {
            problem: ctx.question,
            steps: ctx.accepted_steps,
            candidate,
        })
        .expect("score request serializes");
        let text = self.post_json(&self.cfg.scoring_url(), body)?;
        let parsed: ScoreResponse = serde_json::from_str(&text)
            .map_err(|e| ModelError::MalformedResponse(format!("bad score JSON: {e}")))?;
        if !parsed.score.is_finite() {
            return Err(ModelError::MalformedResponse(format!(
                "non-finite score {}",
                parsed.score
            )));
        }
        Ok(parsed.score.clamp(0.0, 1.0))
    }
}
