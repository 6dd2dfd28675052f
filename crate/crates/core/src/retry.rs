use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Bounded exponential backoff for retryable (transport) failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub initial_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            initial_delay_ms: 500,
            max_delay_ms: 8_000,
        }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        Self {
            max_retries: 0,
            initial_delay_ms: 0,
            max_delay_ms: 0,
        }
    }

    pub fn run<T>(&self, mut op: impl FnMut() -> Result<T>) -> Result<T> {
        let mut attempt = 0;
        let mut delay = self.initial_delay_ms;
        loop {
            match op() {
                Err(e) if e.is_retryable() && attempt < self.max_retries => {
                    attempt += 1;
                    if delay > 0 {
                        thread::sleep(Duration::from_millis(delay));
                    }
                    delay = (delay.saturating_mul(2)).min(self.max_delay_ms);
                }
                other => return other,
            }
        }
    }
}
