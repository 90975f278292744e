//! Sliding-window rate limiter shared by all workers of a live backend.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use super::clock::Clock;
use super::ChatError;

const WINDOW_MS: u64 = 60_000;

/// Admits at most `limit` requests in any sliding 60-second window,
/// blocking (via the clock) until a slot frees up.
pub struct RateLimiter {
    limit: u32,
    clock: Arc<dyn Clock>,
    history: Mutex<VecDeque<u64>>,
}

impl RateLimiter {
    pub fn new(limit: u32, clock: Arc<dyn Clock>) -> Self {
        RateLimiter {
            limit,
            clock,
            history: Mutex::new(VecDeque::new()),
        }
    }

    /// Block until a request may be sent, then record it. Errors only when
    /// the configured budget is zero.
    pub fn acquire(&self) -> Result<(), ChatError> {
        if self.limit == 0 {
            return Err(ChatError::RateLimited);
        }
        loop {
            let wait = {
                let mut history = self.history.lock().expect("limiter lock");
                let now = self.clock.now_ms();
                while history
                    .front()
                    .is_some_and(|&t| now.saturating_sub(t) >= WINDOW_MS)
                {
                    history.pop_front();
                }
                if history.len() < self.limit as usize {
                    history.push_back(now);
                    return Ok(());
                }
                let oldest = *history.front().expect("non-empty");
                (oldest + WINDOW_MS).saturating_sub(now).max(1)
            };
            self.clock.sleep_ms(wait);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chat::clock::FakeClock;

    #[test]
    fn zero_budget_is_rate_limited() {
        let clock = Arc::new(FakeClock::new());
        let limiter = RateLimiter::new(0, clock);
        assert!(matches!(limiter.acquire(), Err(ChatError::RateLimited)));
    }

    #[test]
    fn never_exceeds_limit_in_any_sliding_window() {
        let clock = Arc::new(FakeClock::new());
        let limiter = RateLimiter::new(5, Arc::clone(&clock) as Arc<dyn Clock>);
        let mut stamps = Vec::new();
        for _ in 0..100 {
            limiter.acquire().unwrap();
            stamps.push(clock.now_ms());
        }
        // Among any limit+1 consecutive requests the span must cover a full
        // window, which is exactly the sliding-window property.
        for pair in stamps.windows(6) {
            assert!(pair[5] - pair[0] >= WINDOW_MS);
        }
    }

    #[test]
    fn budget_arithmetic_holds() {
        // 100 requests at 20/min: request i cannot start before
        // floor(i / 20) full windows have elapsed.
        let clock = Arc::new(FakeClock::new());
        let limiter = RateLimiter::new(20, Arc::clone(&clock) as Arc<dyn Clock>);
        let mut stamps = Vec::new();
        for _ in 0..100 {
            limiter.acquire().unwrap();
            stamps.push(clock.now_ms());
        }
        for (i, &t) in stamps.iter().enumerate() {
            assert!(t >= (i as u64 / 20) * WINDOW_MS);
        }
        assert!(stamps[99] >= 4 * WINDOW_MS);
    }
}
