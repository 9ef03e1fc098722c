use std::future::Future;
use std::time::Duration;

use super::{BackendConfig, ErrorKind, OutcomeError};

/// Delay before retry number `retry_index` (0-based): `base * 2^retry_index`,
/// capped at `max_delay`.
pub fn backoff_delay(retry_index: u32, base: Duration, max_delay: Duration) -> Duration {
    let factor = 2u32.saturating_pow(retry_index);
    base.saturating_mul(factor).min(max_delay)
}

#[derive(Debug, Clone)]
pub(crate) struct RetryPolicy {
    pub max_retries: u32,
    pub base: Duration,
    pub cap: Duration,
}

impl RetryPolicy {
    pub fn from_config(config: &BackendConfig) -> Self {
        Self {
            max_retries: config.max_retries,
            base: Duration::from_secs_f64(config.retry_base_delay_s),
            cap: Duration::from_secs_f64(config.retry_max_delay_s),
        }
    }
}

#[derive(Debug)]
pub(crate) enum CallError {
    Timeout(String),
    Status { code: u16, body: String },
    Transport(String),
    Malformed(String),
}

impl CallError {
    pub fn from_reqwest(err: reqwest::Error) -> Self {
        if err.is_timeout() {
            CallError::Timeout(err.to_string())
        } else if err.is_decode() || err.is_body() {
            CallError::Malformed(err.to_string())
        } else {
            CallError::Transport(err.to_string())
        }
    }

    /// Timeouts, connection failures, 5xx and 429 are retried; anything the
    /// server answered coherently is not.
    pub fn is_retryable(&self) -> bool {
        match self {
            CallError::Timeout(_) | CallError::Transport(_) => true,
            CallError::Status { code, .. } => *code == 429 || (500..600).contains(code),
            CallError::Malformed(_) => false,
        }
    }

    pub fn into_outcome_error(self) -> OutcomeError {
        let (kind, message) = match self {
            CallError::Timeout(m) => (ErrorKind::Timeout, m),
            CallError::Status { code, body } => (ErrorKind::HttpStatus(code), body),
            CallError::Transport(m) => (ErrorKind::Transport, m),
            CallError::Malformed(m) => (ErrorKind::MalformedResponse, m),
        };
        OutcomeError { kind, message }
    }
}

/// Runs `call` until it succeeds, fails with a non-retryable error, or the
/// retry budget is spent. Returns the last result and the attempt count.
pub(crate) async fn with_retries<T, F, Fut>(
    policy: &RetryPolicy,
    mut call: F,
) -> (Result<T, CallError>, u32)
where
    F: FnMut() -> Fut,
    Fut: Future<Output = Result<T, CallError>>,
{
    let mut attempts = 0u32;
    loop {
        attempts += 1;
        match call().await {
            Ok(v) => return (Ok(v), attempts),
            Err(e) if e.is_retryable() && attempts <= policy.max_retries => {
                let delay = backoff_delay(attempts - 1, policy.base, policy.cap);
                tracing::debug!(attempt = attempts, ?delay, error = ?e, "retrying");
                tokio::time::sleep(delay).await;
            }
            Err(e) => return (Err(e), attempts),
        }
    }
}
