//! Exponential backoff with full jitter, shared by every HTTP-facing
//! component.

use std::future::Future;
use std::time::Duration;

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backoff {
    pub initial: Duration,
    pub factor: f64,
    /// Total tries, not retries; 5 means at most 4 waits.
    pub max_attempts: u32,
}

impl Default for Backoff {
    fn default() -> Self {
        Backoff { initial: Duration::from_secs(1), factor: 2.0, max_attempts: 5 }
    }
}

impl Backoff {
    /// Full-jitter delay before retrying after try number `attempt`
    /// (0-based): uniform in [0, initial * factor^attempt).
    pub fn delay(&self, attempt: u32) -> Duration {
        let cap = self.initial.as_secs_f64() * self.factor.powi(attempt as i32);
        Duration::from_secs_f64(rand::rng().random::<f64>() * cap)
    }

    /// Drives `op` until success, a non-retryable error, or attempt
    /// exhaustion. Returns the attempt count alongside the final error.
    pub async fn run<T, E, Fut>(
        &self,
        mut retryable: impl FnMut(&E) -> bool,
        mut op: impl FnMut() -> Fut,
    ) -> Result<T, (u32, E)>
    where
        Fut: Future<Output = Result<T, E>>,
    {
        let mut attempt = 0u32;
        loop {
            match op().await {
                Ok(v) => return Ok(v),
                Err(e) => {
                    attempt += 1;
                    if attempt >= self.max_attempts || !retryable(&e) {
                        return Err((attempt, e));
                    }
                    tokio::time::sleep(self.delay(attempt - 1)).await;
                }
            }
        }
    }
}
