use std::thread;
use std::time::Duration;

/// Bounded retry with exponential backoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub multiplier: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 3, initial_backoff: Duration::from_millis(500), multiplier: 2 }
    }
}

impl RetryPolicy {
    pub fn immediate(max_attempts: u32) -> Self {
        Self { max_attempts, initial_backoff: Duration::ZERO, multiplier: 1 }
    }

    pub fn backoff_before(&self, attempt: u32) -> Duration {
        // attempt is 1-based; no wait before the first one
        if attempt <= 1 {
            return Duration::ZERO;
        }
        self.initial_backoff * self.multiplier.saturating_pow(attempt - 2)
    }

    /// Runs `op` until it succeeds, fails with a non-retryable error, or the
    /// attempt budget is spent. `op` receives the 1-based attempt number.
    pub fn run<T, E>(&self, is_retryable: impl Fn(&E) -> bool, mut op: impl FnMut(u32) -> Result<T, E>) -> Result<T, E> {
        let attempts = self.max_attempts.max(1);
        let mut attempt = 1;
        loop {
            let wait = self.backoff_before(attempt);
            if !wait.is_zero() {
                thread::sleep(wait);
            }
            match op(attempt) {
                Ok(v) => return Ok(v),
                Err(e) if attempt < attempts && is_retryable(&e) => attempt += 1,
                Err(e) => return Err(e),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stops_after_budget() {
        let mut calls = 0;
        let out: Result<(), &str> = RetryPolicy::immediate(3).run(|_| true, |_| {
            calls += 1;
            Err("down")
        });
        assert_eq!(out, Err("down"));
        assert_eq!(calls, 3);
    }

    #[test]
    fn non_retryable_fails_fast() {
        let mut calls = 0;
        let _: Result<(), &str> = RetryPolicy::immediate(3).run(|_| false, |_| {
            calls += 1;
            Err("bad")
        });
        assert_eq!(calls, 1);
    }

    #[test]
    fn backoff_grows() {
        let p = RetryPolicy::default();
        assert_eq!(p.backoff_before(1), Duration::ZERO);
        assert_eq!(p.backoff_before(2), Duration::from_millis(500));
        assert_eq!(p.backoff_before(3), Duration::from_millis(1000));
    }
}
