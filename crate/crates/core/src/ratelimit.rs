//! Request pacing shared by the archive fetcher and the toxicity client.
//!
//! Time is read through the [`Clock`] trait so tests can run the limiter
//! against a virtual clock and assert on the exact instants requests were
//! released.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Source of monotonic time and the ability to wait.
pub trait Clock: Send + Sync {
    /// Time elapsed since an arbitrary, fixed origin.
    fn now(&self) -> Duration;
    fn sleep(&self, duration: Duration);
}

/// Wall clock backed by [`Instant`] and [`std::thread::sleep`].
#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        Self {
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
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// Virtual clock: `sleep` advances time instantly.
///
/// Concurrent sleepers each advance the clock to at least their own wake-up
/// instant, so time never moves backwards.
#[derive(Debug, Default)]
pub struct ManualClock {
    nanos: AtomicU64,
}

impl ManualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn advance(&self, duration: Duration) {
        self.nanos
            .fetch_add(duration.as_nanos() as u64, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        Duration::from_nanos(self.nanos.load(Ordering::SeqCst))
    }

    fn sleep(&self, duration: Duration) {
        self.advance(duration);
    }
}

/// Spaces request releases at least `1 / max_per_second` apart.
///
/// With even spacing, any half-open one-second window contains at most
/// `ceil(max_per_second)` releases.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next_slot: Mutex<Option<Duration>>,
}

impl RateLimiter {
    /// # Panics
    ///
    /// Panics if `max_per_second` is not a positive finite number.
    pub fn new(max_per_second: f64) -> Self {
        assert!(
            max_per_second.is_finite() && max_per_second > 0.0,
            "rate must be positive, got {max_per_second}"
        );
        Self {
            interval: Duration::from_secs_f64(1.0 / max_per_second),
            next_slot: Mutex::new(None),
        }
    }

    pub fn interval(&self) -> Duration {
        self.interval
    }

    /// Blocks until the caller may issue one request and returns the
    /// release instant on `clock`'s timeline.
    pub fn acquire(&self, clock: &dyn Clock) -> Duration {
        let slot = {
            let mut next = self.next_slot.lock().expect("rate limiter poisoned");
            let now = clock.now();
            let slot = match *next {
                Some(reserved) if reserved > now => reserved,
                _ => now,
            };
            *next = Some(slot + self.interval);
            slot
        };
        let now = clock.now();
        if slot > now {
            clock.sleep(slot - now);
        }
        slot
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn max_in_any_window(mut releases: Vec<Duration>) -> usize {
        releases.sort();
        let window = Duration::from_secs(1);
        let mut best = 0;
        for (i, start) in releases.iter().enumerate() {
            let count = releases[i..]
                .iter()
                .take_while(|t| **t < *start + window)
                .count();
            best = best.max(count);
        }
        best
    }

    #[test]
    fn sequential_releases_respect_rate() {
        let clock = ManualClock::new();
        let limiter = RateLimiter::new(8.0);
        let releases: Vec<_> = (0..50).map(|_| limiter.acquire(&clock)).collect();
        assert_eq!(max_in_any_window(releases.clone()), 8);
        assert_eq!(releases[1] - releases[0], Duration::from_millis(125));
    }

    #[test]
    fn concurrent_releases_respect_rate() {
        let clock = Arc::new(ManualClock::new());
        let limiter = Arc::new(RateLimiter::new(10.0));
        let releases = Mutex::new(Vec::new());
        std::thread::scope(|scope| {
            for _ in 0..4 {
                scope.spawn(|| {
                    for _ in 0..25 {
                        let t = limiter.acquire(clock.as_ref());
                        releases.lock().unwrap().push(t);
                    }
                });
            }
        });
        let releases = releases.into_inner().unwrap();
        assert_eq!(releases.len(), 100);
        assert!(max_in_any_window(releases) <= 10);
    }

    #[test]
    fn idle_time_is_not_banked() {
        let clock = ManualClock::new();
        let limiter = RateLimiter::new(2.0);
        limiter.acquire(&clock);
        clock.advance(Duration::from_secs(10));
        let a = limiter.acquire(&clock);
        let b = limiter.acquire(&clock);
        assert_eq!(b - a, Duration::from_millis(500));
    }
}
