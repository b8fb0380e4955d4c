//! Evaluation-time accounting.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use crate::error::Result;
use crate::problems::Objective;

/// Forwards to `inner` and accumulates the time spent inside `evaluate`.
/// Concurrent calls add up, so under parallel execution this is CPU time
/// rather than wall time.
pub struct TimedObjective<'a, O: ?Sized> {
    inner: &'a O,
    nanos: AtomicU64,
}

impl<'a, O: Objective + ?Sized> TimedObjective<'a, O> {
    pub fn new(inner: &'a O) -> Self {
        Self {
            inner,
            nanos: AtomicU64::new(0),
        }
    }

    pub fn seconds(&self) -> f64 {
        self.nanos.load(Ordering::Relaxed) as f64 * 1e-9
    }
}

impl<O: Objective + ?Sized> Objective for TimedObjective<'_, O> {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn lower(&self) -> &[f64] {
        self.inner.lower()
    }

    fn upper(&self) -> &[f64] {
        self.inner.upper()
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let start = Instant::now();
        let v = self.inner.evaluate(x);
        self.nanos
            .fetch_add(start.elapsed().as_nanos() as u64, Ordering::Relaxed);
        v
    }

    fn optimum_value(&self) -> f64 {
        self.inner.optimum_value()
    }

    fn label(&self) -> String {
        self.inner.label()
    }
}
