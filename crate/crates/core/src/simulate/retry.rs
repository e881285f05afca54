//! Retry with exponential backoff, and a token-bucket limiter with a
//! concurrency cap.

use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::client::{ChatClient, ChatError, CompletionRequest};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
    /// Full jitter: the actual delay is uniform in `[0, backoff]`.
    pub jitter: bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            base_delay_ms: 500,
            max_delay_ms: 30_000,
            jitter: true,
        }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        Self {
            max_attempts: 1,
            ..Self::default()
        }
    }

    /// Upper bound of the wait before attempt `attempt + 1` (0-based).
    pub fn backoff(&self, attempt: u32) -> Duration {
        let exp = self
            .base_delay_ms
            .saturating_mul(1u64 << attempt.min(20))
            .min(self.max_delay_ms);
        Duration::from_millis(exp)
    }

    /// Calls `op` until it succeeds, fails with a non-retryable error, or the
    /// attempt budget is spent.
    pub fn run<T>(
        &self,
        mut op: impl FnMut() -> Result<T, ChatError>,
        mut sleep: impl FnMut(Duration),
    ) -> Result<T, ChatError> {
        let attempts = self.max_attempts.max(1);
        let mut last = None;
        for attempt in 0..attempts {
            match op() {
                Ok(v) => return Ok(v),
                Err(e) if e.is_retryable() && attempt + 1 < attempts => {
                    tracing::debug!(attempt, error = %e, "retrying backend call");
                    let cap = self.backoff(attempt);
                    let wait = if self.jitter && !cap.is_zero() {
                        Duration::from_millis(rand::thread_rng().gen_range(0..=cap.as_millis() as u64))
                    } else {
                        cap
                    };
                    sleep(wait);
                    last = Some(e);
                }
                Err(e) if e.is_retryable() => {
                    return Err(ChatError::Exhausted {
                        attempts,
                        last: Box::new(e),
                    })
                }
                Err(e) => return Err(e),
            }
        }
        Err(ChatError::Exhausted {
            attempts,
            last: Box::new(last.unwrap_or_else(|| ChatError::Unavailable("no attempts".into()))),
        })
    }
}

/// Wraps any client with a retry policy.
pub struct Retrying<C> {
    inner: C,
    policy: RetryPolicy,
}

impl<C: ChatClient> Retrying<C> {
    pub fn new(inner: C, policy: RetryPolicy) -> Self {
        Self { inner, policy }
    }
}

impl<C: ChatClient> ChatClient for Retrying<C> {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ChatError> {
        self.policy.run(|| self.inner.complete(request), std::thread::sleep)
    }

    fn id(&self) -> String {
        self.inner.id()
    }
}

#[derive(Debug)]
struct Bucket {
    tokens: f64,
    last: Instant,
    in_flight: usize,
}

/// Token bucket (`rate` tokens/s, capacity `burst`) plus a cap on
/// simultaneous in-flight requests. Internally synchronised.
#[derive(Debug)]
pub struct RateLimiter {
    rate: f64,
    burst: f64,
    max_concurrent: usize,
    state: Mutex<Bucket>,
    freed: Condvar,
}

pub struct Permit<'a> {
    limiter: &'a RateLimiter,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut s = self.limiter.state.lock().unwrap_or_else(|p| p.into_inner());
        s.in_flight -= 1;
        self.limiter.freed.notify_one();
    }
}

impl RateLimiter {
    /// `rate <= 0` disables the token bucket; `max_concurrent == 0` disables
    /// the concurrency cap.
    pub fn new(rate: f64, burst: f64, max_concurrent: usize) -> Self {
        Self {
            rate,
            burst: burst.max(1.0),
            max_concurrent,
            state: Mutex::new(Bucket {
                tokens: burst.max(1.0),
                last: Instant::now(),
                in_flight: 0,
            }),
            freed: Condvar::new(),
        }
    }

    pub fn unlimited() -> Self {
        Self::new(0.0, 1.0, 0)
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut s = self.state.lock().unwrap_or_else(|p| p.into_inner());
        loop {
            if self.max_concurrent > 0 && s.in_flight >= self.max_concurrent {
                s = self.freed.wait(s).unwrap_or_else(|p| p.into_inner());
                continue;
            }
            if self.rate <= 0.0 {
                break;
            }
            let now = Instant::now();
            let elapsed = now.duration_since(s.last).as_secs_f64();
            s.tokens = (s.tokens + elapsed * self.rate).min(self.burst);
            s.last = now;
            if s.tokens >= 1.0 {
                s.tokens -= 1.0;
                break;
            }
            let wait = Duration::from_secs_f64((1.0 - s.tokens) / self.rate);
            s = self
                .freed
                .wait_timeout(s, wait)
                .unwrap_or_else(|p| p.into_inner())
                .0;
        }
        s.in_flight += 1;
        Permit { limiter: self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn backoff_doubles_and_caps() {
        let p = RetryPolicy {
            max_attempts: 10,
            base_delay_ms: 100,
            max_delay_ms: 1000,
            jitter: false,
        };
        let ms: Vec<u128> = (0..6).map(|a| p.backoff(a).as_millis()).collect();
        assert_eq!(ms, vec![100, 200, 400, 800, 1000, 1000]);
    }

    #[test]
    fn retries_transient_then_succeeds() {
        let p = RetryPolicy {
            jitter: false,
            ..Default::default()
        };
        let mut calls = 0;
        let mut slept = Vec::new();
        let out = p.run(
            || {
                calls += 1;
                if calls < 3 {
                    Err(ChatError::Http { status: 503, body: String::new() })
                } else {
                    Ok(calls)
                }
            },
            |d| slept.push(d.as_millis()),
        );
        assert_eq!(out, Ok(3));
        assert_eq!(slept, vec![500, 1000]);
    }

    #[test]
    fn non_retryable_fails_fast() {
        let mut calls = 0;
        let out: Result<(), _> = RetryPolicy::default().run(
            || {
                calls += 1;
                Err(ChatError::Http { status: 400, body: "bad".into() })
            },
            |_| panic!("must not sleep"),
        );
        assert_eq!(calls, 1);
        assert!(matches!(out, Err(ChatError::Http { status: 400, .. })));
    }

    #[test]
    fn exhausted_after_max_attempts() {
        let p = RetryPolicy {
            max_attempts: 3,
            jitter: false,
            ..Default::default()
        };
        let mut calls = 0;
        let out: Result<(), _> = p.run(
            || {
                calls += 1;
                Err(ChatError::Transport("reset".into()))
            },
            |_| {},
        );
        assert_eq!(calls, 3);
        assert!(matches!(out, Err(ChatError::Exhausted { attempts: 3, .. })));
    }

    #[test]
    fn concurrency_cap_is_respected() {
        let limiter = Arc::new(RateLimiter::new(0.0, 1.0, 2));
        let active = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let (limiter, active, peak) = (limiter.clone(), active.clone(), peak.clone());
                std::thread::spawn(move || {
                    let _p = limiter.acquire();
                    let now = active.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    std::thread::sleep(Duration::from_millis(5));
                    active.fetch_sub(1, Ordering::SeqCst);
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }

    #[test]
    fn token_bucket_paces_requests() {
        let limiter = RateLimiter::new(100.0, 1.0, 0);
        let start = Instant::now();
        for _ in 0..6 {
            drop(limiter.acquire());
        }
        // first token is free, the remaining five need ~10ms each
        assert!(start.elapsed() >= Duration::from_millis(40), "{:?}", start.elapsed());
    }
}
