//! Token-bucket admission control for rate-limited scorer endpoints.

use std::sync::{Arc, Mutex};
use std::time::Duration;

use super::clock::Clock;

/// Token bucket refilled continuously at `qps`, holding at most `burst`
/// tokens.
///
/// The bucket starts empty, so even the first request waits one refill
/// interval and the cap is honored from the very first window. `acquire`
/// blocks (via the clock) until a token is available; admission is serialized
/// through an internal lock.
pub struct RateLimiter {
    qps: f64,
    burst: f64,
    clock: Arc<dyn Clock>,
    state: Mutex<Bucket>,
}

struct Bucket {
    tokens: f64,
    last_refill: Duration,
}

impl RateLimiter {
    /// Panics if `qps` is not positive or `burst` is zero.
    pub fn new(qps: f64, burst: u32, clock: Arc<dyn Clock>) -> Self {
        assert!(qps > 0.0, "qps must be positive");
        assert!(burst > 0, "burst must be at least 1");
        let state = Mutex::new(Bucket {
            tokens: 0.0,
            last_refill: clock.now(),
        });
        RateLimiter {
            qps,
            burst: f64::from(burst),
            clock,
            state,
        }
    }

    /// Block until one token is available, then consume it.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut bucket = self.state.lock().unwrap();
                let now = self.clock.now();
                let elapsed = now.saturating_sub(bucket.last_refill);
                bucket.tokens = (bucket.tokens + elapsed.as_secs_f64() * self.qps).min(self.burst);
                bucket.last_refill = now;
                if bucket.tokens >= 1.0 {
                    bucket.tokens -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - bucket.tokens) / self.qps)
            };
            // Never sleep zero, or a rounding artifact could spin forever.
            self.clock.sleep(wait.max(Duration::from_nanos(1)));
        }
    }
}
