//! Aggregation of a run directory into comparison tables.
//!
//! Writes `summary.csv`, `pairwise.csv`, `wdl.csv` and `convergence.csv`
//! next to the run files. Convergence curves are aligned on the union of
//! logged evaluation counts; each run contributes its last logged value at or
//! before a grid point (carry-forward) and is left out before its first one.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use npdc_core::analysis::{mean, wdl_summary, Verdict};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::experiment::{read_trajectory, RunStatus, RunSummary, TrajectoryRow};

/// Significance level of the pairwise verdicts.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub problem: String,
    pub algo: String,
    pub runs: usize,
    pub failed: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseRow {
    pub problem: String,
    pub algo_a: String,
    pub algo_b: String,
    pub mean_a: f64,
    pub mean_b: f64,
    pub u: f64,
    pub p_value: f64,
    /// Verdict for `algo_a` against `algo_b`.
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WdlRow {
    pub algo_a: String,
    pub algo_b: String,
    pub wins: usize,
    pub draws: usize,
    pub losses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub problem: String,
    pub algo: String,
    pub evaluations: u64,
    pub mean_best_error: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Tables {
    pub summary: Vec<SummaryRow>,
    pub pairwise: Vec<PairwiseRow>,
    pub wdl: Vec<WdlRow>,
    pub convergence: Vec<ConvergenceRow>,
}

type Key = (String, String);

struct Group {
    errors: Vec<f64>,
    failed: usize,
    trajectories: Vec<Vec<TrajectoryRow>>,
}

fn load(dir: &Path) -> CliResult<BTreeMap<Key, Group>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Runtime(format!("no run summaries in {}", dir.display())));
    }
    let mut groups: BTreeMap<Key, Group> = BTreeMap::new();
    for path in paths {
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let s: RunSummary = serde_json::from_str(&text)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        let g = groups.entry((s.problem.clone(), s.algo.clone())).or_insert(Group {
            errors: Vec::new(),
            failed: 0,
            trajectories: Vec::new(),
        });
        match (s.status, s.final_error) {
            (RunStatus::Ok, Some(e)) => {
                g.errors.push(e);
                g.trajectories.push(read_trajectory(&dir.join(&s.trajectory_file))?);
            }
            _ => g.failed += 1,
        }
    }
    Ok(groups)
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn convergence(problem: &str, algo: &str, runs: &[Vec<TrajectoryRow>]) -> Vec<ConvergenceRow> {
    let grid: BTreeSet<u64> = runs.iter().flatten().map(|r| r.evaluations).collect();
    let mut cursors = vec![0usize; runs.len()];
    grid.into_iter()
        .map(|g| {
            let mut sum = 0.0;
            let mut n = 0;
            for (run, cursor) in runs.iter().zip(&mut cursors) {
                while *cursor < run.len() && run[*cursor].evaluations <= g {
                    *cursor += 1;
                }
                if *cursor > 0 {
                    sum += run[*cursor - 1].best_error;
                    n += 1;
                }
            }
            ConvergenceRow {
                problem: problem.to_string(),
                algo: algo.to_string(),
                evaluations: g,
                mean_best_error: sum / n as f64,
                runs: n,
            }
        })
        .collect()
}

/// Aggregates the run directory without writing anything.
pub fn build_tables(dir: &Path) -> CliResult<Tables> {
    let groups = load(dir)?;
    let mut tables = Tables::default();
    for ((problem, algo), g) in &groups {
        let (min, max) = g
            .errors
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        tables.summary.push(SummaryRow {
            problem: problem.clone(),
            algo: algo.clone(),
            runs: g.errors.len(),
            failed: g.failed,
            mean: if g.errors.is_empty() { f64::NAN } else { mean(&g.errors) },
            std: std_dev(&g.errors),
            min,
            max,
        });
        tables.convergence.extend(convergence(problem, algo, &g.trajectories));
    }

    let problems: BTreeSet<&String> = groups.keys().map(|k| &k.0).collect();
    let algos: BTreeSet<&String> = groups.keys().map(|k| &k.1).collect();
    for problem in &problems {
        for a in &algos {
            for b in algos.range::<&String, _>((std::ops::Bound::Excluded(a), std::ops::Bound::Unbounded)) {
                let (Some(ga), Some(gb)) = (
                    groups.get(&((*problem).clone(), (*a).clone())),
                    groups.get(&((*problem).clone(), (*b).clone())),
                ) else {
                    continue;
                };
                if ga.errors.is_empty() || gb.errors.is_empty() {
                    continue;
                }
                let (verdict, test) = Verdict::classify(&ga.errors, &gb.errors, ALPHA)?;
                tables.pairwise.push(PairwiseRow {
                    problem: (*problem).clone(),
                    algo_a: (*a).clone(),
                    algo_b: (*b).clone(),
                    mean_a: mean(&ga.errors),
                    mean_b: mean(&gb.errors),
                    u: test.u,
                    p_value: test.p_value,
                    verdict: verdict.to_string(),
                });
            }
        }
    }

    for a in &algos {
        for b in &algos {
            if a == b {
                continue;
            }
            let paired: Vec<(Vec<f64>, Vec<f64>)> = problems
                .iter()
                .filter_map(|p| {
                    let ga = groups.get(&((*p).clone(), (*a).clone()))?;
                    let gb = groups.get(&((*p).clone(), (*b).clone()))?;
                    (!ga.errors.is_empty() && !gb.errors.is_empty())
                        .then(|| (ga.errors.clone(), gb.errors.clone()))
                })
                .collect();
            if paired.is_empty() {
                continue;
            }
            let c = wdl_summary(&paired, ALPHA)?;
            tables.wdl.push(WdlRow {
                algo_a: (*a).clone(),
                algo_b: (*b).clone(),
                wins: c.wins,
                draws: c.draws,
                losses: c.losses,
            });
        }
    }
    Ok(tables)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> CliResult<()> {
    let io = |e: csv::Error| CliError::Runtime(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    if rows.is_empty() {
        w.write_record(header).map_err(io)?;
    }
    for row in rows {
        w.serialize(row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Aggregates `dir` and writes the four tables into it.
pub fn render_tables(dir: &Path) -> CliResult<Tables> {
    let tables = build_tables(dir)?;
    write_csv(
        &dir.join("summary.csv"),
        &tables.summary,
        &["problem", "algo", "runs", "failed", "mean", "std", "min", "max"],
    )?;
    write_csv(
        &dir.join("pairwise.csv"),
        &tables.pairwise,
        &["problem", "algo_a", "algo_b", "mean_a", "mean_b", "u", "p_value", "verdict"],
    )?;
    write_csv(
        &dir.join("wdl.csv"),
        &tables.wdl,
        &["algo_a", "algo_b", "wins", "draws", "losses"],
    )?;
    write_csv(
        &dir.join("convergence.csv"),
        &tables.convergence,
        &["problem", "algo", "evaluations", "mean_best_error", "runs"],
    )?;
    Ok(tables)
}
