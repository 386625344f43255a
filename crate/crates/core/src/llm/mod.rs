//! Completion backends.
//!
//! [`Backend`] is a plain text-completion function. The mocks are
//! deterministic and never touch the network; [`LiveBackend`] posts to an
//! OpenAI-style completions endpoint with retries, and [`Throttled`] adds an
//! in-flight cap and a request-rate limit around any backend. The
//! [`ResponseCache`] keys stored completions by a SHA-256 of model,
//! temperature and prompt.

mod cache;
mod live;
mod mock;
mod throttle;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use thiserror::Error;

pub use cache::{cache_key, cached_complete, ResponseCache};
#[cfg(feature = "live")]
pub use live::UreqTransport;
pub use live::{LiveBackend, LiveConfig, RetryPolicy, Transport, TransportError, API_KEY_ENV};
pub use mock::{EchoMock, OracleMock, ReverseMock};
pub use throttle::Throttled;

pub const DEFAULT_MAX_OUTPUT_TOKENS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("invalid completion request: {0}")]
    InvalidRequest(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("endpoint refused the prompt as too long: {0}")]
    BudgetExceeded(String),
    #[error("request timed out after {attempts} attempts")]
    Timeout { attempts: usize },
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: usize, message: String },
    #[error("malformed completion response: {0}")]
    MalformedResponse(String),
    #[error("{0}")]
    Unavailable(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub prompt: String,
    pub max_output_tokens: usize,
    pub temperature: f64,
    pub model: String,
}

impl CompletionRequest {
    pub fn new(model: impl Into<String>, prompt: impl Into<String>) -> Self {
        CompletionRequest {
            prompt: prompt.into(),
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            temperature: 0.0,
            model: model.into(),
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.prompt.trim().is_empty() {
            return Err(LlmError::InvalidRequest("empty prompt".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::InvalidRequest(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        Ok(())
    }
}

pub trait Backend: Send + Sync {
    fn name(&self) -> &str;

    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError>;
}

impl<B: Backend + ?Sized> Backend for Arc<B> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        (**self).complete(req)
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        (**self).complete(req)
    }
}

impl<B: Backend + ?Sized> Backend for &B {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        (**self).complete(req)
    }
}

/// Validates `req` and forwards it to `backend`.
pub fn complete(backend: &dyn Backend, req: &CompletionRequest) -> Result<String, LlmError> {
    req.validate()?;
    backend.complete(req)
}

/// Counts calls that reach the wrapped backend.
#[derive(Debug, Default)]
pub struct Counting<B> {
    inner: B,
    calls: AtomicUsize,
}

impl<B> Counting<B> {
    pub fn new(inner: B) -> Self {
        Counting {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<B: Backend> Backend for Counting<B> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.complete(req)
    }
}
