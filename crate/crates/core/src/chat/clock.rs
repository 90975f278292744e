//! Time source abstraction so rate limiting and backoff are testable with a
//! fake clock.

use std::sync::Mutex;
use std::time::{Duration, Instant};

pub trait Clock: Send + Sync {
    /// Milliseconds since an arbitrary fixed origin.
    fn now_ms(&self) -> u64;
    fn sleep_ms(&self, ms: u64);
}

/// Wall-clock time, anchored at construction.
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock {
            origin: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        self.origin.elapsed().as_millis() as u64
    }

    fn sleep_ms(&self, ms: u64) {
        std::thread::sleep(Duration::from_millis(ms));
    }
}

/// Manually advanced clock; sleeping advances it instantly.
pub struct FakeClock {
    now: Mutex<u64>,
}

impl FakeClock {
    pub fn new() -> Self {
        FakeClock { now: Mutex::new(0) }
    }

    pub fn advance_ms(&self, ms: u64) {
        *self.now.lock().expect("clock lock") += ms;
    }
}

impl Default for FakeClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for FakeClock {
    fn now_ms(&self) -> u64 {
        *self.now.lock().expect("clock lock")
    }

    fn sleep_ms(&self, ms: u64) {
        self.advance_ms(ms);
    }
}
