//! Generator and scorer abstractions.
//!
//! Two families of implementations exist: remote HTTP clients for real
//! models ([`remote`]) and the deterministic seeded simulator in
//! [`crate::synthetic`]. Implementations must be safe to share across
//! concurrently running episodes.

pub mod remote;

pub use remote::{RemoteClient, RemoteEndpointConfig};

use thiserror::Error;

use crate::search::StepContext;

/// A step emitted by a generator before scoring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedStep {
    pub text: String,
    /// Output tokens spent on this candidate, as reported by the backend
    /// (simulators document their own counting).
    pub tokens: u64,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("retries exhausted after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("endpoint rejected request with status {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("unknown problem id: {0}")]
    UnknownProblem(String),
}

/// Proposes candidate next steps.
///
/// Must return exactly `n` candidates or an error, never silently fewer.
/// `seed` drives any implementation-side randomness; remote backends ignore
/// it (sampling happens server-side).
pub trait StepGenerator: Send + Sync {
    fn generate(
        &self,
        ctx: &StepContext<'_>,
        n: usize,
        temperature: f64,
        seed: u64,
    ) -> Result<Vec<GeneratedStep>, ModelError>;
}

/// Rates one candidate step in context. The engine clamps returned scores
/// to `[0, 1]` on ingestion; implementations should stay in range anyway.
pub trait StepScorer: Send + Sync {
    fn score(&self, ctx: &StepContext<'_>, candidate: &str) -> Result<f64, ModelError>;
}
