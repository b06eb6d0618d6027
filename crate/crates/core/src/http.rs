//! Blocking HTTP transport, retries, and an injectable clock.
//!
//! Every networked component talks through [`HttpClient`] and paces itself
//! with a [`Clock`], so tests run against fixture servers on virtual time.

use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, TimeZone, Utc};

/// Wall-clock source measured in epoch milliseconds.
pub trait Clock: Send + Sync {
    fn now_millis(&self) -> i64;
    fn sleep(&self, d: Duration);

    fn now(&self) -> DateTime<Utc> {
        Utc.timestamp_millis_opt(self.now_millis())
            .single()
            .unwrap_or_default()
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_millis(&self) -> i64 {
        Utc::now().timestamp_millis()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Virtual clock: `sleep` advances time instantly.
#[derive(Debug, Clone)]
pub struct ManualClock {
    now: Arc<AtomicI64>,
}

impl ManualClock {
    pub fn new(start_millis: i64) -> Self {
        Self {
            now: Arc::new(AtomicI64::new(start_millis)),
        }
    }

    pub fn advance(&self, d: Duration) {
        self.now.fetch_add(d.as_millis() as i64, Ordering::SeqCst);
    }
}

impl Default for ManualClock {
    fn default() -> Self {
        // 2023-01-01T00:00:00Z
        Self::new(1_672_531_200_000)
    }
}

impl Clock for ManualClock {
    fn now_millis(&self) -> i64 {
        self.now.load(Ordering::SeqCst)
    }

    fn sleep(&self, d: Duration) {
        self.advance(d);
    }
}

#[derive(Debug, Clone)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("connection to {url} failed: {reason}")]
    Connect { url: String, reason: String },
    #[error("{url} returned status {status}")]
    Status { url: String, status: u16 },
}

pub trait HttpClient: Send + Sync {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError>;
    fn post_json(&self, url: &str, body: &serde_json::Value) -> Result<HttpResponse, TransportError>;
}

/// `ureq`-backed client. Non-2xx statuses come back as responses, not errors.
pub struct UreqClient {
    agent: ureq::Agent,
}

impl UreqClient {
    pub fn new(timeout: Duration) -> Self {
        Self {
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }
}

impl Default for UreqClient {
    fn default() -> Self {
        Self::new(Duration::from_secs(30))
    }
}

fn into_response(
    url: &str,
    res: Result<ureq::Response, ureq::Error>,
) -> Result<HttpResponse, TransportError> {
    match res {
        Ok(r) => {
            let status = r.status();
            let body = r.into_string().map_err(|e| TransportError::Connect {
                url: url.to_string(),
                reason: e.to_string(),
            })?;
            Ok(HttpResponse { status, body })
        }
        Err(ureq::Error::Status(status, r)) => Ok(HttpResponse {
            status,
            body: r.into_string().unwrap_or_default(),
        }),
        Err(e) => Err(TransportError::Connect {
            url: url.to_string(),
            reason: e.to_string(),
        }),
    }
}

impl HttpClient for UreqClient {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        into_response(url, self.agent.get(url).call())
    }

    fn post_json(&self, url: &str, body: &serde_json::Value) -> Result<HttpResponse, TransportError> {
        into_response(url, self.agent.post(url).send_json(body.clone()))
    }
}

/// Exponential backoff: `attempts` tries, sleeping `base * 2^i` between them.
#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    /// Retries transport failures and 5xx/429 statuses. Other statuses are
    /// returned to the caller on the first attempt.
    pub fn run<F>(&self, clock: &dyn Clock, mut call: F) -> Result<HttpResponse, TransportError>
    where
        F: FnMut() -> Result<HttpResponse, TransportError>,
    {
        let attempts = self.attempts.max(1);
        let mut last = None;
        for i in 0..attempts {
            if i > 0 {
                clock.sleep(self.base_delay * 2u32.pow(i - 1));
            }
            match call() {
                Ok(r) if r.status >= 500 || r.status == 429 => {
                    log::warn!("attempt {} got status {}", i + 1, r.status);
                    last = Some(Ok(r));
                }
                Ok(r) => return Ok(r),
                Err(e) => {
                    log::warn!("attempt {} failed: {e}", i + 1);
                    last = Some(Err(e));
                }
            }
        }
        last.expect("at least one attempt")
    }
}

/// Percent-encodes a query component.
pub fn encode_query(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => {
                out.push(b as char)
            }
            b' ' => out.push('+'),
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    #[test]
    fn manual_clock_sleep_advances() {
        let c = ManualClock::new(0);
        c.sleep(Duration::from_secs(2));
        assert_eq!(c.now_millis(), 2000);
    }

    #[test]
    fn retry_gives_up_after_three_attempts_with_backoff() {
        let clock = ManualClock::new(0);
        let calls = Cell::new(0);
        let res = RetryPolicy::default().run(&clock, || {
            calls.set(calls.get() + 1);
            Err(TransportError::Connect {
                url: "x".into(),
                reason: "refused".into(),
            })
        });
        assert!(res.is_err());
        assert_eq!(calls.get(), 3);
        // 500ms + 1000ms
        assert_eq!(clock.now_millis(), 1500);
    }

    #[test]
    fn retry_returns_client_errors_immediately() {
        let clock = ManualClock::new(0);
        let calls = Cell::new(0);
        let res = RetryPolicy::default()
            .run(&clock, || {
                calls.set(calls.get() + 1);
                Ok(HttpResponse {
                    status: 404,
                    body: String::new(),
                })
            })
            .unwrap();
        assert_eq!(res.status, 404);
        assert_eq!(calls.get(), 1);
    }

    #[test]
    fn query_encoding() {
        assert_eq!(encode_query("blood pressure"), "blood+pressure");
        assert_eq!(encode_query("a&b"), "a%26b");
    }
}
