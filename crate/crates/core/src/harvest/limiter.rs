use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use crate::http::Clock;

/// Sliding-window request limiter.
///
/// Grants at most `limit` requests in any window of length `window`: the
/// `limit`-th most recent grant must be at least `window` old before the next
/// one is issued. Callers block (on the injected clock) until a slot frees.
pub struct RateLimiter {
    limit: usize,
    window_ms: i64,
    clock: Arc<dyn Clock>,
    recent: Mutex<VecDeque<i64>>,
}

impl RateLimiter {
    pub fn new(limit: usize, window: Duration, clock: Arc<dyn Clock>) -> Self {
        assert!(limit > 0, "rate limit must be positive");
        Self {
            limit,
            window_ms: window.as_millis() as i64,
            clock,
            recent: Mutex::new(VecDeque::with_capacity(limit)),
        }
    }

    /// Default storefront pacing: 20 requests per minute.
    pub fn per_minute(limit: usize, clock: Arc<dyn Clock>) -> Self {
        Self::new(limit, Duration::from_secs(60), clock)
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn window(&self) -> Duration {
        Duration::from_millis(self.window_ms as u64)
    }

    /// Blocks until a request may be sent; returns the grant time (epoch ms).
    pub fn acquire(&self) -> i64 {
        let mut recent = self.recent.lock().unwrap_or_else(|p| p.into_inner());
        loop {
            let now = self.clock.now_millis();
            if recent.len() < self.limit {
                recent.push_back(now);
                return now;
            }
            let oldest = *recent.front().expect("non-empty when full");
            let ready_at = oldest + self.window_ms;
            if now >= ready_at {
                recent.pop_front();
                recent.push_back(now);
                return now;
            }
            self.clock
                .sleep(Duration::from_millis((ready_at - now) as u64));
        }
    }
}

/// Largest number of timestamps falling in any half-open window `[t, t + window)`.
pub fn max_in_window(log: &[i64], window: Duration) -> usize {
    let mut sorted = log.to_vec();
    sorted.sort_unstable();
    let w = window.as_millis() as i64;
    let mut best = 0;
    let mut lo = 0;
    for hi in 0..sorted.len() {
        while sorted[hi] - sorted[lo] >= w {
            lo += 1;
        }
        best = best.max(hi - lo + 1);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::ManualClock;

    #[test]
    fn twenty_first_request_waits_out_the_window() {
        let clock = ManualClock::new(0);
        let lim = RateLimiter::per_minute(20, Arc::new(clock.clone()));
        let grants: Vec<i64> = (0..21).map(|_| lim.acquire()).collect();
        assert!(grants[..20].iter().all(|&t| t == 0));
        assert_eq!(grants[20], 60_000);
        assert_eq!(max_in_window(&grants, Duration::from_secs(60)), 20);
    }

    #[test]
    fn spaced_requests_never_wait() {
        let clock = ManualClock::new(0);
        let lim = RateLimiter::per_minute(2, Arc::new(clock.clone()));
        for i in 0..5 {
            assert_eq!(lim.acquire(), i * 30_000);
            clock.advance(Duration::from_secs(30));
        }
    }

    #[test]
    fn window_count_helper() {
        let w = Duration::from_millis(10);
        assert_eq!(max_in_window(&[], w), 0);
        assert_eq!(max_in_window(&[0, 9, 10, 19], w), 2);
        assert_eq!(max_in_window(&[5, 0, 1, 2], w), 4);
    }

    proptest::proptest! {
        #[test]
        fn never_exceeds_limit(limit in 1usize..8, gaps in proptest::collection::vec(0u64..5_000, 1..80)) {
            let clock = ManualClock::new(0);
            let lim = RateLimiter::new(limit, Duration::from_secs(10), Arc::new(clock.clone()));
            let mut log = Vec::new();
            for g in gaps {
                clock.advance(Duration::from_millis(g));
                log.push(lim.acquire());
            }
            proptest::prop_assert!(max_in_window(&log, Duration::from_secs(10)) <= limit);
        }
    }
}
