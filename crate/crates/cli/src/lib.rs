//! Experiment runner for `npdc-core`: configs, seeded run matrices, speed-up
//! sweeps and table rendering.

pub mod config;
pub mod error;
pub mod experiment;
pub mod render;

pub use config::{Algorithm, ExperimentConfig, Overrides};
pub use error::{CliError, CliResult};
pub use experiment::{run_experiment, speedup_sweep, ExperimentRun, RunStatus, RunSummary, SpeedupRow};
pub use render::{build_tables, render_tables, Tables};
