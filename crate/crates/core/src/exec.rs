//! Fixed-size worker pool used for the barrier-synchronized phases.

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::{Error, Result};

/// Runs data-parallel phases on `workers` threads. Every call returns only
/// after all tasks finished, which is the iteration barrier. With one worker
/// the phase runs inline on the caller's thread.
pub struct Executor {
    workers: usize,
    pool: Option<ThreadPool>,
}

impl Executor {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::InvalidParameter("workers must be at least 1".into()));
        }
        let pool = if workers > 1 {
            Some(
                ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self { workers, pool })
    }

    pub fn sequential() -> Self {
        Self {
            workers: 1,
            pool: None,
        }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Applies `f` to every aligned `(a[k], b[k])` pair. Items are split into
    /// `workers` contiguous, near-equal blocks.
    pub fn for_each_pair<A, B, F>(&self, a: &mut [A], b: &mut [B], f: F)
    where
        A: Send,
        B: Send,
        F: Fn(usize, &mut A, &mut B) + Sync,
    {
        assert_eq!(a.len(), b.len());
        match &self.pool {
            None => {
                for (k, (x, y)) in a.iter_mut().zip(b.iter_mut()).enumerate() {
                    f(k, x, y);
                }
            }
            Some(pool) => {
                let chunk = a.len().div_ceil(self.workers).max(1);
                pool.install(|| {
                    a.par_chunks_mut(chunk)
                        .zip(b.par_chunks_mut(chunk))
                        .enumerate()
                        .for_each(|(c, (xs, ys))| {
                            for (k, (x, y)) in xs.iter_mut().zip(ys.iter_mut()).enumerate() {
                                f(c * chunk + k, x, y);
                            }
                        });
                });
            }
        }
    }

    /// Applies `f` to every item, chunked like [`Executor::for_each_pair`].
    pub fn for_each<A, F>(&self, a: &mut [A], f: F)
    where
        A: Send,
        F: Fn(usize, &mut A) + Sync,
    {
        match &self.pool {
            None => a.iter_mut().enumerate().for_each(|(k, x)| f(k, x)),
            Some(pool) => {
                let chunk = a.len().div_ceil(self.workers).max(1);
                pool.install(|| {
                    a.par_chunks_mut(chunk).enumerate().for_each(|(c, xs)| {
                        for (k, x) in xs.iter_mut().enumerate() {
                            f(c * chunk + k, x);
                        }
                    });
                });
            }
        }
    }

    /// Order-preserving parallel map.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(usize, &T) -> R + Sync,
    {
        match &self.pool {
            None => items.iter().enumerate().map(|(k, x)| f(k, x)).collect(),
            Some(pool) => pool.install(|| {
                items
                    .par_iter()
                    .enumerate()
                    .map(|(k, x)| f(k, x))
                    .collect()
            }),
        }
    }
}
