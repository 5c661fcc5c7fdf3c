//! Outbound HTTP plumbing shared by the remote transcription and
//! chat-completion clients: client construction, bearer credentials and the
//! retry loop.

use std::net::{IpAddr, SocketAddr};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use rand::Rng;
use reqwest::dns::{Addrs, Name, Resolve, Resolving};
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Longest response body kept in error messages.
const BODY_EXCERPT_CHARS: usize = 300;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NetworkOptions {
    /// Resolve every hostname to this address instead of asking the system
    /// resolver. The URL's port is kept. Used to point clients at local stubs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolve_all_to: Option<IpAddr>,
}

/// Resolver that answers every lookup with one fixed address and keeps a
/// count of the lookups it served.
#[derive(Debug, Clone)]
pub struct PinnedResolver {
    target: IpAddr,
    lookups: Arc<AtomicUsize>,
}

impl PinnedResolver {
    pub fn new(target: IpAddr) -> Self {
        Self {
            target,
            lookups: Arc::new(AtomicUsize::new(0)),
        }
    }

    pub fn lookups(&self) -> usize {
        self.lookups.load(Ordering::SeqCst)
    }
}

impl Resolve for PinnedResolver {
    fn resolve(&self, _name: Name) -> Resolving {
        self.lookups.fetch_add(1, Ordering::SeqCst);
        let addr = SocketAddr::new(self.target, 0);
        Box::pin(async move { Ok(Box::new(std::iter::once(addr)) as Addrs) })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CallError {
    #[error("backend unreachable after {attempts} attempt(s): {reason}")]
    Unreachable { attempts: u32, reason: String },
    #[error("backend rejected the request (status {status}): {body}")]
    Rejected { status: u16, body: String },
}

/// Exponential backoff: 0.5 s, 1 s, 2 s, … each scaled by a uniform ±20 %
/// jitter, with at most `max_retries` retries after the first attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_s: f64,
    pub factor: f64,
    pub jitter: f64,
}

impl RetryPolicy {
    pub fn with_max_retries(max_retries: u32) -> Self {
        Self {
            max_retries,
            base_delay_s: 0.5,
            factor: 2.0,
            jitter: 0.2,
        }
    }

    /// Delay before retry number `retry` (0-based).
    pub fn delay<R: Rng + ?Sized>(&self, retry: u32, rng: &mut R) -> Duration {
        let nominal = self.base_delay_s * self.factor.powi(retry as i32);
        let scale = if self.jitter > 0.0 {
            rng.random_range(1.0 - self.jitter..=1.0 + self.jitter)
        } else {
            1.0
        };
        Duration::from_secs_f64(nominal * scale)
    }
}

pub fn build_client(timeout: Duration, network: &NetworkOptions) -> Result<reqwest::Client, String> {
    let mut builder = reqwest::Client::builder().timeout(timeout);
    if let Some(ip) = network.resolve_all_to {
        builder = builder.dns_resolver(Arc::new(PinnedResolver::new(ip)));
    }
    builder.build().map_err(|e| format!("cannot build HTTP client: {e}"))
}

/// Reads the bearer token from the named environment variable, if any.
pub fn bearer_token(env_var: Option<&str>) -> Option<String> {
    env_var
        .and_then(|name| std::env::var(name).ok())
        .filter(|t| !t.is_empty())
}

fn excerpt(body: &str) -> String {
    let mut out: String = body.chars().take(BODY_EXCERPT_CHARS).collect();
    if body.chars().count() > BODY_EXCERPT_CHARS {
        out.push('…');
    }
    out
}

fn is_retryable(status: StatusCode) -> bool {
    status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS
}

/// Sends the request built by `make_request` until it succeeds, fails
/// permanently or the retry budget is spent. Network failures and
/// 429/5xx responses are retried; other statuses fail at once.
///
/// Returns the body text of the first 2xx response.
pub async fn send_with_retry<F>(policy: RetryPolicy, mut make_request: F) -> Result<String, CallError>
where
    F: FnMut() -> reqwest::RequestBuilder,
{
    let attempts = policy.max_retries + 1;
    let mut last = CallError::Unreachable {
        attempts: 0,
        reason: "no attempt made".into(),
    };
    for attempt in 0..attempts {
        if attempt > 0 {
            let delay = policy.delay(attempt - 1, &mut rand::rng());
            tokio::time::sleep(delay).await;
        }
        match make_request().send().await {
            Ok(response) => {
                let status = response.status();
                let body = response.text().await;
                match (status.is_success(), body) {
                    (true, Ok(text)) => return Ok(text),
                    (true, Err(e)) => {
                        last = CallError::Unreachable {
                            attempts: attempt + 1,
                            reason: format!("response body interrupted: {e}"),
                        };
                    }
                    (false, body) => {
                        let rejected = CallError::Rejected {
                            status: status.as_u16(),
                            body: excerpt(&body.unwrap_or_default()),
                        };
                        if !is_retryable(status) {
                            return Err(rejected);
                        }
                        last = rejected;
                    }
                }
            }
            Err(e) => {
                last = CallError::Unreachable {
                    attempts: attempt + 1,
                    reason: e.to_string(),
                };
            }
        }
        tracing::warn!(attempt = attempt + 1, of = attempts, error = %last, "backend call failed");
    }
    if let CallError::Unreachable { attempts: a, .. } = &mut last {
        *a = attempts;
    }
    Err(last)
}
