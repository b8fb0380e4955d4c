//! Seeded run matrices and the files they leave behind.
//!
//! Per run `i` the output directory receives
//! `<algo>_<problem>_run<i>.csv` with columns
//! `run_id, algo, problem, seed, evaluations, best_error` and a JSON summary
//! next to it. Only the JSON `timing` field varies between identical runs.

use std::fs;
use std::path::{Path, PathBuf};

use npdc_core::analysis::{speedup_model, SpeedupParams};
use npdc_core::{run_cc, run_npdc, Objective, RunRecord, Timing};
use serde::{Deserialize, Serialize};

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// JSON summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: usize,
    pub algo: String,
    pub problem: String,
    pub seed: u64,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub final_error: Option<f64>,
    pub consumed: Option<u64>,
    pub timing: Option<Timing>,
    /// File name of the trajectory CSV, relative to the summary.
    pub trajectory_file: String,
    pub config: ExperimentConfig,
}

/// One row of a trajectory CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub run_id: usize,
    pub algo: String,
    pub problem: String,
    pub seed: u64,
    pub evaluations: u64,
    pub best_error: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub summary: RunSummary,
    /// `None` when the run failed.
    pub record: Option<RunRecord>,
}

/// Runs one repetition of `config` on an already built problem.
pub fn run_single(config: &ExperimentConfig, problem: &dyn Objective, run: usize) -> CliResult<RunRecord> {
    let result = match config.algorithm()? {
        Algorithm::Npdc | Algorithm::NpdcRandom => run_npdc(problem, &config.npdc_config(run)),
        Algorithm::Cc { grouping, workflow } => run_cc(problem, &config.cc_config(run, grouping, workflow)),
    };
    result.map_err(|e| CliError::Runtime(e.to_string()))
}

fn file_stem(algo: &str, problem: &str, run: usize) -> String {
    format!("{algo}_{problem}_run{run:03}")
}

/// Executes every repetition and writes its files. An algorithm error only
/// marks that run as failed; I/O errors abort.
pub fn run_experiment(config: &ExperimentConfig) -> CliResult<Vec<ExperimentRun>> {
    config.validate()?;
    let label = config.descriptor()?.label();
    let problem = config.build_problem()?;
    fs::create_dir_all(&config.out).map_err(|e| CliError::io(&config.out, e))?;

    let mut runs = Vec::with_capacity(config.reps);
    for run in 0..config.reps {
        let seed = config.run_seed(run);
        let stem = file_stem(&config.algo, &label, run);
        let outcome = run_single(config, problem.as_ref(), run);
        let csv_path = config.out.join(format!("{stem}.csv"));
        let rows: Vec<TrajectoryRow> = match &outcome {
            Ok(record) => record
                .trajectory
                .iter()
                .map(|p| TrajectoryRow {
                    run_id: run,
                    algo: config.algo.clone(),
                    problem: label.clone(),
                    seed,
                    evaluations: p.evaluations,
                    best_error: p.best_error,
                })
                .collect(),
            Err(_) => Vec::new(),
        };
        write_trajectory(&csv_path, &rows)?;

        let summary = RunSummary {
            run_id: run,
            algo: config.algo.clone(),
            problem: label.clone(),
            seed,
            status: if outcome.is_ok() { RunStatus::Ok } else { RunStatus::Failed },
            error: outcome.as_ref().err().map(|e| e.to_string()),
            final_error: outcome.as_ref().ok().map(|r| r.final_error),
            consumed: outcome.as_ref().ok().map(|r| r.consumed),
            timing: outcome.as_ref().ok().map(|r| r.timing),
            trajectory_file: format!("{stem}.csv"),
            config: config.clone(),
        };
        let json_path = config.out.join(format!("{stem}.json"));
        let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Runtime(e.to_string()))?;
        fs::write(&json_path, text + "\n").map_err(|e| CliError::io(&json_path, e))?;
        runs.push(ExperimentRun {
            summary,
            record: outcome.ok(),
        });
    }
    Ok(runs)
}

fn write_trajectory(path: &Path, rows: &[TrajectoryRow]) -> CliResult<()> {
    let io = |e: csv::Error| CliError::Runtime(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    if rows.is_empty() {
        w.write_record(["run_id", "algo", "problem", "seed", "evaluations", "best_error"])
            .map_err(io)?;
    }
    for row in rows {
        w.serialize(row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_trajectory(path: &Path) -> CliResult<Vec<TrajectoryRow>> {
    let io = |e: csv::Error| CliError::Runtime(format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(io)?;
    r.deserialize().map(|row| row.map_err(io)).collect()
}

/// One worker count of a speed-up sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub workers: usize,
    pub total_time: f64,
    pub evaluation_time: f64,
    /// `evaluation_time / total_time` of this worker count.
    pub fe_fraction: f64,
    pub measured_speedup: f64,
    /// Model prediction using the single-worker evaluation fraction.
    pub model_speedup: f64,
}

pub const SPEEDUP_FILE: &str = "speedup.csv";

/// Times repetition 0 of `config` at each worker count (best of `reps`
/// timings) and writes `speedup.csv` into the output directory.
pub fn speedup_sweep(config: &ExperimentConfig, worker_counts: &[usize]) -> CliResult<Vec<SpeedupRow>> {
    if !worker_counts.contains(&1) {
        return Err(CliError::Config("worker counts must include 1".into()));
    }
    if worker_counts.contains(&0) {
        return Err(CliError::Config("worker counts must be positive".into()));
    }
    config.validate()?;
    let problem = config.build_problem()?;
    let time = |workers: usize| -> CliResult<(f64, f64)> {
        let cfg = ExperimentConfig {
            workers,
            ..config.clone()
        };
        let mut best: Option<(f64, f64)> = None;
        for _ in 0..config.reps {
            let t = run_single(&cfg, problem.as_ref(), 0)?.timing;
            if best.is_none_or(|(total, _)| t.total_time < total) {
                best = Some((t.total_time, t.evaluation_time));
            }
        }
        Ok(best.expect("reps >= 1"))
    };
    let (t1, e1) = time(1)?;
    let fe1 = (e1 / t1).clamp(0.0, 1.0);
    let mut rows = Vec::with_capacity(worker_counts.len());
    for &n in worker_counts {
        let (total, eval) = if n == 1 { (t1, e1) } else { time(n)? };
        rows.push(SpeedupRow {
            workers: n,
            total_time: total,
            evaluation_time: eval,
            fe_fraction: (eval / total).clamp(0.0, 1.0),
            measured_speedup: t1 / total,
            model_speedup: speedup_model(SpeedupParams::new(n, fe1)?),
        });
    }
    fs::create_dir_all(&config.out).map_err(|e| CliError::io(&config.out, e))?;
    let path: PathBuf = config.out.join(SPEEDUP_FILE);
    let io = |e: csv::Error| CliError::Runtime(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(&path).map_err(io)?;
    for row in &rows {
        w.serialize(row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(rows)
}
