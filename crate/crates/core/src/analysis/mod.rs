//! Divergence and speed-up models plus the statistics used to compare runs.

mod divergence;
mod speedup;
mod stats;

pub use divergence::{div_parallel, div_serial, gap_ratio, simulate_divergence, DivergenceParams};
pub use speedup::{speedup_model, SpeedupParams};
pub use stats::{
    mean, rank_sum_test, rank_sum_test_with, wdl_summary, RankSumMethod, RankSumResult, Verdict,
    WdlCounts, EXACT_LIMIT,
};
