use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use super::{Backend, CompletionRequest, LlmError};

/// Caps concurrent calls into the wrapped backend and, optionally, limits
/// the request rate with a token bucket holding one token.
#[derive(Debug)]
pub struct Throttled<B> {
    inner: B,
    cap: usize,
    in_flight: Mutex<usize>,
    slot_freed: Condvar,
    peak: AtomicUsize,
    rate: Option<Mutex<Bucket>>,
}

#[derive(Debug)]
struct Bucket {
    interval: Duration,
    next_free: Option<Instant>,
}

impl<B> Throttled<B> {
    /// `requests_per_second` of `None` (or non-positive) disables rate limiting.
    pub fn new(inner: B, cap: usize, requests_per_second: Option<f64>) -> Self {
        let rate = requests_per_second.filter(|r| *r > 0.0).map(|r| {
            Mutex::new(Bucket {
                interval: Duration::from_secs_f64(1.0 / r),
                next_free: None,
            })
        });
        Throttled {
            inner,
            cap: cap.max(1),
            in_flight: Mutex::new(0),
            slot_freed: Condvar::new(),
            peak: AtomicUsize::new(0),
            rate,
        }
    }

    /// Highest number of simultaneous calls observed.
    pub fn peak_in_flight(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    fn wait_for_rate(&self) {
        let Some(bucket) = &self.rate else { return };
        let wait = {
            let mut bucket = bucket.lock().unwrap();
            let now = Instant::now();
            let start = bucket.next_free.map_or(now, |t| t.max(now));
            bucket.next_free = Some(start + bucket.interval);
            start - now
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

struct Slot<'a, B>(&'a Throttled<B>);

impl<B> Drop for Slot<'_, B> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().unwrap() -= 1;
        self.0.slot_freed.notify_one();
    }
}

impl<B: Backend> Backend for Throttled<B> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        let _slot = {
            let mut n = self.in_flight.lock().unwrap();
            while *n >= self.cap {
                n = self.slot_freed.wait(n).unwrap();
            }
            *n += 1;
            self.peak.fetch_max(*n, Ordering::SeqCst);
            Slot(self)
        };
        self.wait_for_rate();
        self.inner.complete(req)
    }
}
