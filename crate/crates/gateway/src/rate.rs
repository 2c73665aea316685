//! Sliding-window request limiter and the clock it runs on.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

pub trait Clock: Send + Sync {
    /// Time since an arbitrary fixed origin.
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock { origin: Instant::now() }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d)
    }
}

/// A clock that only moves when someone sleeps on it.
#[derive(Default)]
pub struct VirtualClock {
    now: Mutex<Duration>,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn advance(&self, d: Duration) {
        *self.now.lock().expect("clock lock") += d;
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> Duration {
        *self.now.lock().expect("clock lock")
    }

    fn sleep(&self, d: Duration) {
        self.advance(d)
    }
}

pub const WINDOW: Duration = Duration::from_secs(60);

/// Admits at most `limit` request starts in any sliding window.
pub struct RateLimiter {
    limit: usize,
    window: Duration,
    clock: Arc<dyn Clock>,
    starts: Mutex<VecDeque<Duration>>,
}

impl RateLimiter {
    pub fn per_minute(limit: u32, clock: Arc<dyn Clock>) -> Self {
        RateLimiter {
            limit: limit.max(1) as usize,
            window: WINDOW,
            clock,
            starts: Mutex::new(VecDeque::new()),
        }
    }

    /// Blocks until a request may start, records the start and returns its time.
    pub fn acquire(&self) -> Duration {
        // The lock is held while waiting so waiters are admitted one at a time.
        let mut starts = self.starts.lock().expect("limiter lock");
        loop {
            let now = self.clock.now();
            while starts.front().is_some_and(|&s| s + self.window <= now) {
                starts.pop_front();
            }
            if starts.len() < self.limit {
                starts.push_back(now);
                return now;
            }
            let oldest = *starts.front().expect("full window is non-empty");
            self.clock.sleep(oldest + self.window - now);
        }
    }
}
