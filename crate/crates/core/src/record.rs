//! Run output shared by every optimizer.

use serde::{Deserialize, Serialize};

/// A point is logged whenever the best error improves and at least once per this many evaluations.
pub const TRAJECTORY_INTERVAL: u64 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub evaluations: u64,
    pub best_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    /// Wall-clock seconds of the whole run.
    pub total_time: f64,
    /// Wall-clock seconds spent inside objective calls on the critical path.
    pub evaluation_time: f64,
    pub iteration_count: u64,
    pub workers: usize,
}

/// Output of one seeded optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: String,
    pub problem: String,
    pub seed: u64,
    pub budget: u64,
    /// Evaluations charged to the budget, including decomposition probes.
    pub consumed: u64,
    pub trajectory: Vec<TrajectoryPoint>,
    /// Error of the returned solution.
    pub final_error: f64,
    pub best_solution: Vec<f64>,
    pub timing: Timing,
}

/// Best-so-far logger with the sampling rule above. Evaluation counts of
/// logged points are strictly increasing.
#[derive(Debug, Clone)]
pub struct TrajectoryRecorder {
    points: Vec<TrajectoryPoint>,
    best: f64,
    interval: u64,
}

impl Default for TrajectoryRecorder {
    fn default() -> Self {
        Self::new(TRAJECTORY_INTERVAL)
    }
}

impl TrajectoryRecorder {
    pub fn new(interval: u64) -> Self {
        Self {
            points: Vec::new(),
            best: f64::INFINITY,
            interval: interval.max(1),
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn observe(&mut self, evaluations: u64, error: f64) {
        let improved = error < self.best;
        if improved {
            self.best = error;
        }
        match self.points.last_mut() {
            None => self.points.push(TrajectoryPoint {
                evaluations,
                best_error: self.best,
            }),
            Some(last) if evaluations == last.evaluations => last.best_error = self.best,
            Some(last) => {
                let crossed = evaluations / self.interval > last.evaluations / self.interval;
                if improved || crossed {
                    self.points.push(TrajectoryPoint {
                        evaluations,
                        best_error: self.best,
                    });
                }
            }
        }
    }

    /// Makes sure the final state is logged.
    pub fn finish(mut self, evaluations: u64) -> Vec<TrajectoryPoint> {
        if self
            .points
            .last()
            .is_some_and(|p| p.evaluations < evaluations)
        {
            self.points.push(TrajectoryPoint {
                evaluations,
                best_error: self.best,
            });
        }
        self.points
    }
}
