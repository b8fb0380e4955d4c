use crate::error::{Error, Result};

/// Counts objective-function evaluations against a fixed limit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Budget {
    limit: u64,
    used: u64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Self { limit, used: 0 }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn remaining(&self) -> u64 {
        self.limit - self.used
    }

    pub fn is_exhausted(&self) -> bool {
        self.used >= self.limit
    }

    /// Charges `n` evaluations, or charges nothing and fails if fewer remain.
    pub fn try_charge(&mut self, n: u64) -> Result<()> {
        if n > self.remaining() {
            return Err(Error::BudgetExhausted {
                limit: self.limit,
                used: self.used,
                requested: n,
            });
        }
        self.used += n;
        Ok(())
    }
}
