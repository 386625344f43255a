use std::sync::Mutex;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::{Backend, CompletionRequest, LlmError};

/// Environment variable holding the endpoint's API key.
pub const API_KEY_ENV: &str = "TAXALIGN_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportError {
    Timeout,
    Other(String),
}

/// One HTTP POST with a JSON body. Returns the status code and raw body for
/// any response the server sent.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, api_key: Option<&str>, body: &Value) -> Result<(u16, String), TransportError>;
}

/// Exponential backoff with full jitter: before retry `n` (0-based) the
/// client sleeps a uniform random time in `[0, base_delay * 2^n]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: usize,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            base_delay: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    pub fn backoff_ceiling(&self, retry: u32) -> Duration {
        self.base_delay
            .saturating_mul(1u32.checked_shl(retry).unwrap_or(u32::MAX))
    }

    /// Delay for `retry` given a uniform sample `unit` in `[0, 1)`.
    pub fn jittered(&self, retry: u32, unit: f64) -> Duration {
        self.backoff_ceiling(retry).mul_f64(unit.clamp(0.0, 1.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiveConfig {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub retry: RetryPolicy,
}

impl LiveConfig {
    /// Config for `endpoint` with the key taken from [`API_KEY_ENV`].
    pub fn from_env(endpoint: impl Into<String>) -> Self {
        LiveConfig {
            endpoint: endpoint.into(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            timeout: Duration::from_secs(60),
            retry: RetryPolicy::default(),
        }
    }
}

/// Completion endpoint speaking the OpenAI completions wire format.
pub struct LiveBackend<T> {
    config: LiveConfig,
    transport: T,
    rng: Mutex<ChaCha8Rng>,
}

impl<T: Transport> LiveBackend<T> {
    pub fn with_transport(config: LiveConfig, transport: T) -> Self {
        let seed = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_nanos() as u64);
        LiveBackend {
            config,
            transport,
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
        }
    }

    pub fn config(&self) -> &LiveConfig {
        &self.config
    }

    fn sleep_before_retry(&self, retry: u32) {
        let unit: f64 = self.rng.lock().unwrap().random();
        std::thread::sleep(self.config.retry.jittered(retry, unit));
    }
}

#[cfg(feature = "live")]
impl LiveBackend<UreqTransport> {
    pub fn new(config: LiveConfig) -> Self {
        let transport = UreqTransport::new(config.timeout);
        Self::with_transport(config, transport)
    }
}

fn completion_text(body: &str) -> Result<String, LlmError> {
    let v: Value = serde_json::from_str(body).map_err(|e| LlmError::MalformedResponse(e.to_string()))?;
    let choice = &v["choices"][0];
    choice["text"]
        .as_str()
        .or_else(|| choice["message"]["content"].as_str())
        .map(str::to_string)
        .ok_or_else(|| LlmError::MalformedResponse("no choices[0].text in response".into()))
}

fn is_length_refusal(status: u16, body: &str) -> bool {
    let body = body.to_lowercase();
    matches!(status, 400 | 413 | 422)
        && [
            "context length",
            "context_length",
            "maximum context",
            "too many tokens",
            "too long",
        ]
        .iter()
        .any(|needle| body.contains(needle))
}

fn is_transient(status: u16) -> bool {
    matches!(status, 408 | 409 | 425 | 429) || (500..600).contains(&status)
}

impl<T: Transport> Backend for LiveBackend<T> {
    fn name(&self) -> &str {
        "live"
    }

    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        let body = json!({
            "model": req.model,
            "prompt": req.prompt,
            "temperature": req.temperature,
            "max_tokens": req.max_output_tokens,
        });
        let attempts = self.config.retry.max_attempts.max(1);
        let mut last = LlmError::Unavailable("no attempt made".into());
        for attempt in 1..=attempts {
            let outcome = self
                .transport
                .post_json(&self.config.endpoint, self.config.api_key.as_deref(), &body);
            last = match outcome {
                Ok((status, text)) if (200..300).contains(&status) => return completion_text(&text),
                Ok((status, text)) if is_length_refusal(status, &text) => {
                    return Err(LlmError::BudgetExceeded(text));
                }
                Ok((status, text)) if is_transient(status) => LlmError::Http { status, body: text },
                Ok((status, text)) => return Err(LlmError::Http { status, body: text }),
                Err(TransportError::Timeout) => LlmError::Timeout { attempts: attempt },
                Err(TransportError::Other(message)) => LlmError::Transport {
                    attempts: attempt,
                    message,
                },
            };
            log::warn!("completion attempt {attempt}/{attempts} failed: {last}");
            if attempt < attempts {
                self.sleep_before_retry(attempt as u32 - 1);
            }
        }
        Err(last)
    }
}

#[cfg(feature = "live")]
pub struct UreqTransport {
    agent: ureq::Agent,
}

#[cfg(feature = "live")]
impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        UreqTransport { agent }
    }
}

#[cfg(feature = "live")]
impl Transport for UreqTransport {
    fn post_json(&self, url: &str, api_key: Option<&str>, body: &Value) -> Result<(u16, String), TransportError> {
        let mut request = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(key) = api_key {
            request = request.header("Authorization", format!("Bearer {key}"));
        }
        match request.send_json(body) {
            Ok(mut response) => {
                let status = response.status().as_u16();
                let text = response
                    .body_mut()
                    .read_to_string()
                    .map_err(|e| TransportError::Other(e.to_string()))?;
                Ok((status, text))
            }
            Err(ureq::Error::Timeout(_)) => Err(TransportError::Timeout),
            Err(e) => Err(TransportError::Other(e.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    /// Replays canned outcomes and records how many requests it saw.
    struct Scripted {
        outcomes: Mutex<VecDeque<Result<(u16, String), TransportError>>>,
        seen: Mutex<Vec<Value>>,
    }

    impl Scripted {
        fn new(outcomes: Vec<Result<(u16, String), TransportError>>) -> Self {
            Scripted {
                outcomes: Mutex::new(outcomes.into()),
                seen: Mutex::new(Vec::new()),
            }
        }
    }

    impl Transport for Scripted {
        fn post_json(&self, _url: &str, _key: Option<&str>, body: &Value) -> Result<(u16, String), TransportError> {
            self.seen.lock().unwrap().push(body.clone());
            self.outcomes
                .lock()
                .unwrap()
                .pop_front()
                .unwrap_or(Err(TransportError::Other("script exhausted".into())))
        }
    }

    fn backend(outcomes: Vec<Result<(u16, String), TransportError>>) -> LiveBackend<Scripted> {
        let config = LiveConfig {
            endpoint: "http://localhost/v1/completions".into(),
            api_key: None,
            timeout: Duration::from_secs(1),
            retry: RetryPolicy {
                max_attempts: 5,
                base_delay: Duration::from_millis(1),
            },
        };
        LiveBackend::with_transport(config, Scripted::new(outcomes))
    }

    fn ok(text: &str) -> Result<(u16, String), TransportError> {
        Ok((200, json!({"choices": [{"text": text}]}).to_string()))
    }

    fn req() -> CompletionRequest {
        CompletionRequest::new("gpt-test", "Choices: a; b\nAnswer:")
    }

    #[test]
    fn backoff_ceiling_doubles_from_one_second() {
        let p = RetryPolicy::default();
        let ceilings: Vec<u64> = (0..4).map(|n| p.backoff_ceiling(n).as_secs()).collect();
        assert_eq!(ceilings, [1, 2, 4, 8]);
        assert_eq!(p.jittered(2, 0.5), Duration::from_secs(2));
        assert_eq!(p.jittered(3, 0.0), Duration::ZERO);
    }

    #[test]
    fn request_body_carries_model_prompt_and_sampling() {
        let b = backend(vec![ok(" a; b")]);
        assert_eq!(b.complete(&req()).unwrap(), " a; b");
        let seen = b.transport.seen.lock().unwrap();
        assert_eq!(seen.len(), 1);
        assert_eq!(seen[0]["model"], "gpt-test");
        assert_eq!(seen[0]["temperature"], 0.0);
        assert_eq!(seen[0]["max_tokens"], 256);
        assert_eq!(seen[0]["prompt"], "Choices: a; b\nAnswer:");
    }

    #[test]
    fn transient_failures_are_retried() {
        let b = backend(vec![
            Ok((503, "busy".into())),
            Err(TransportError::Timeout),
            Ok((429, "slow down".into())),
            ok("b; a"),
        ]);
        assert_eq!(b.complete(&req()).unwrap(), "b; a");
        assert_eq!(b.transport.seen.lock().unwrap().len(), 4);
    }

    #[test]
    fn gives_up_after_five_attempts() {
        let b = backend((0..10).map(|_| Ok((500, "down".into()))).collect());
        let err = b.complete(&req()).unwrap_err();
        assert_eq!(
            err,
            LlmError::Http {
                status: 500,
                body: "down".into()
            }
        );
        assert_eq!(b.transport.seen.lock().unwrap().len(), 5);

        let b = backend((0..10).map(|_| Err(TransportError::Timeout)).collect());
        assert_eq!(b.complete(&req()).unwrap_err(), LlmError::Timeout { attempts: 5 });
    }

    #[test]
    fn permanent_errors_stop_immediately() {
        let b = backend(vec![Ok((401, "bad key".into())), ok("never")]);
        assert!(matches!(b.complete(&req()), Err(LlmError::Http { status: 401, .. })));
        assert_eq!(b.transport.seen.lock().unwrap().len(), 1);

        let refusal = r#"{"error":{"code":"context_length_exceeded"}}"#;
        let b = backend(vec![Ok((400, refusal.into()))]);
        assert!(matches!(b.complete(&req()), Err(LlmError::BudgetExceeded(_))));
    }

    #[test]
    fn chat_style_and_malformed_responses() {
        let chat = json!({"choices": [{"message": {"content": "a"}}]}).to_string();
        assert_eq!(backend(vec![Ok((200, chat))]).complete(&req()).unwrap(), "a");
        let b = backend(vec![Ok((200, "{}".into()))]);
        assert!(matches!(b.complete(&req()), Err(LlmError::MalformedResponse(_))));
    }

    #[cfg(feature = "live")]
    #[test]
    fn ureq_transport_against_local_server() {
        use std::io::{Read, Write};
        use std::net::TcpListener;

        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let server = std::thread::spawn(move || {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buf = Vec::new();
            let mut chunk = [0u8; 4096];
            // read headers, then the declared body length
            loop {
                let n = stream.read(&mut chunk).unwrap();
                buf.extend_from_slice(&chunk[..n]);
                let text = String::from_utf8_lossy(&buf);
                if let Some(end) = text.find("\r\n\r\n") {
                    let len = text[..end]
                        .lines()
                        .find_map(|l| {
                            l.to_ascii_lowercase()
                                .strip_prefix("content-length:")
                                .map(|v| v.trim().parse::<usize>().unwrap())
                        })
                        .unwrap_or(0);
                    if buf.len() >= end + 4 + len {
                        break;
                    }
                }
                if n == 0 {
                    break;
                }
            }
            let request = String::from_utf8_lossy(&buf).to_string();
            let body = r#"{"choices":[{"text":"x; y"}]}"#;
            write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
            request
        });
        let config = LiveConfig {
            endpoint: format!("http://{addr}/v1/completions"),
            api_key: Some("secret".into()),
            timeout: Duration::from_secs(10),
            retry: RetryPolicy::default(),
        };
        let b = LiveBackend::new(config);
        assert_eq!(b.complete(&req()).unwrap(), "x; y");
        let request = server.join().unwrap();
        assert!(request.starts_with("POST /v1/completions"));
        assert!(request.to_ascii_lowercase().contains("authorization: bearer secret"));
        let body: serde_json::Value = serde_json::from_str(request.split("\r\n\r\n").nth(1).unwrap()).unwrap();
        assert_eq!(body["model"], "gpt-test");
        assert_eq!(body["max_tokens"], 256);
    }
}
