//! Experiment configuration: a flat TOML file plus command-line overrides.
//!
//! ```toml
//! problem = "k-group:rastrigin:1000:50:1"   # class:base:D:m:seed, "-" for no m
//! algo = "npdc"
//! budget = 3000000
//! lambda = 1
//! reps = 20
//! seed = 0          # run i uses seed + i
//! workers = 1
//! out = "runs/f12"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use npdc_core::npdc::{IterationOptions, Variant};
use npdc_core::{
    CcConfig, CostlyObjective, GroupingStrategy, NpdcConfig, Objective, ObjectiveProblem,
    ProblemDescriptor, Workflow,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Npdc,
    NpdcRandom,
    Cc {
        grouping: GroupingKind,
        workflow: Workflow,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupingKind {
    Natural,
    Random,
    Differential,
}

impl Algorithm {
    pub const NAMES: [&'static str; 8] = [
        "npdc", "npdc-random", "dc-ng", "dc-rg", "dc-dg", "dc-ng-p", "dc-rg-p", "dc-dg-p",
    ];

    pub fn is_npdc(self) -> bool {
        matches!(self, Algorithm::Npdc | Algorithm::NpdcRandom)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Npdc => f.write_str("npdc"),
            Algorithm::NpdcRandom => f.write_str("npdc-random"),
            Algorithm::Cc { grouping, workflow } => {
                let g = match grouping {
                    GroupingKind::Natural => "ng",
                    GroupingKind::Random => "rg",
                    GroupingKind::Differential => "dg",
                };
                let p = if *workflow == Workflow::Parallel { "-p" } else { "" };
                write!(f, "dc-{g}{p}")
            }
        }
    }
}

impl FromStr for Algorithm {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let cc = |grouping, workflow| Algorithm::Cc { grouping, workflow };
        Ok(match lower.as_str() {
            "npdc" => Algorithm::Npdc,
            "npdc-random" => Algorithm::NpdcRandom,
            "dc-ng" => cc(GroupingKind::Natural, Workflow::Serial),
            "dc-rg" => cc(GroupingKind::Random, Workflow::Serial),
            "dc-dg" => cc(GroupingKind::Differential, Workflow::Serial),
            "dc-ng-p" => cc(GroupingKind::Natural, Workflow::Parallel),
            "dc-rg-p" => cc(GroupingKind::Random, Workflow::Parallel),
            "dc-dg-p" => cc(GroupingKind::Differential, Workflow::Parallel),
            _ => {
                return Err(CliError::Config(format!(
                    "unknown algorithm '{s}' (expected one of {})",
                    Algorithm::NAMES.join(", ")
                )))
            }
        })
    }
}

/// Everything needed to reproduce a batch of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Compact problem descriptor `class:base:D:m:seed`.
    pub problem: String,
    pub algo: String,
    pub budget: u64,
    #[serde(default = "one")]
    pub lambda: usize,
    #[serde(default = "one")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Group count for random grouping.
    #[serde(default = "ten")]
    pub groups: usize,
    /// Differential-grouping threshold; relative default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Update rejected NPDC variables too.
    #[serde(default)]
    pub update_rejected: bool,
    /// Busy-wait added to every objective call, in microseconds.
    #[serde(default)]
    pub eval_cost_us: u64,
    /// Busy-wait per NPDC variable per iteration, in microseconds.
    #[serde(default)]
    pub subproblem_cost_us: u64,
}

fn one() -> usize {
    1
}

fn ten() -> usize {
    10
}

fn default_out() -> PathBuf {
    PathBuf::from("runs")
}

/// Command-line values that replace file values when present.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub problem: Option<String>,
    pub algo: Option<String>,
    pub budget: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub reps: Option<usize>,
    pub out: Option<PathBuf>,
    pub lambda: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(problem: &str, algo: &str, budget: u64) -> Self {
        Self {
            problem: problem.to_string(),
            algo: algo.to_string(),
            budget,
            lambda: 1,
            reps: 1,
            seed: 0,
            workers: 1,
            out: default_out(),
            groups: 10,
            epsilon: None,
            update_rejected: false,
            eval_cost_us: 0,
            subproblem_cost_us: 0,
        }
    }

    pub fn from_toml_str(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Builds a config from an optional file and the overrides. Without a
    /// file, `problem`, `algo` and `budget` must all be given.
    pub fn resolve(file: Option<&Path>, overrides: &Overrides) -> CliResult<Self> {
        let mut cfg = match file {
            Some(p) => Self::load(p)?,
            None => {
                let missing = |what: &str| CliError::Config(format!("--{what} is required without --config"));
                Self::new(
                    overrides.problem.as_deref().ok_or_else(|| missing("problem"))?,
                    overrides.algo.as_deref().ok_or_else(|| missing("algo"))?,
                    overrides.budget.ok_or_else(|| missing("budget"))?,
                )
            }
        };
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.problem {
            self.problem = v.clone();
        }
        if let Some(v) = &o.algo {
            self.algo = v.clone();
        }
        if let Some(v) = o.budget {
            self.budget = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.workers {
            self.workers = v;
        }
        if let Some(v) = o.reps {
            self.reps = v;
        }
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = o.lambda {
            self.lambda = v;
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        self.algorithm()?;
        // building catches unsupported class/base combinations early
        self.descriptor()?.build()?;
        if self.reps == 0 {
            return Err(CliError::Config("reps must be at least 1".into()));
        }
        if self.lambda == 0 {
            return Err(CliError::Config("lambda must be at least 1".into()));
        }
        if self.budget < 2 * self.lambda as u64 {
            return Err(CliError::Config(format!(
                "budget {} is below 2 x lambda",
                self.budget
            )));
        }
        if self.workers == 0 {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn algorithm(&self) -> CliResult<Algorithm> {
        self.algo.parse()
    }

    pub fn descriptor(&self) -> CliResult<ProblemDescriptor> {
        Ok(ProblemDescriptor::from_compact(&self.problem)?)
    }

    /// Seed of repetition `run`.
    pub fn run_seed(&self, run: usize) -> u64 {
        self.seed.wrapping_add(run as u64)
    }

    /// The objective with any injected evaluation cost.
    pub fn build_problem(&self) -> CliResult<Box<dyn Objective>> {
        let problem: ObjectiveProblem = self.descriptor()?.build()?;
        Ok(if self.eval_cost_us > 0 {
            Box::new(CostlyObjective::new(problem, Duration::from_micros(self.eval_cost_us)))
        } else {
            Box::new(problem)
        })
    }

    pub fn npdc_config(&self, run: usize) -> NpdcConfig {
        NpdcConfig {
            budget: self.budget,
            lambda: self.lambda,
            seed: self.run_seed(run),
            workers: self.workers,
            options: IterationOptions {
                variant: if self.algo == "npdc-random" {
                    Variant::RandomMeta
                } else {
                    Variant::Standard
                },
                update_rejected: self.update_rejected,
                subproblem_cost: Duration::from_micros(self.subproblem_cost_us),
                ..IterationOptions::standard()
            },
        }
    }

    pub fn cc_config(&self, run: usize, grouping: GroupingKind, workflow: Workflow) -> CcConfig {
        CcConfig {
            grouping: match grouping {
                GroupingKind::Natural => GroupingStrategy::Natural,
                GroupingKind::Random => GroupingStrategy::Random {
                    groups: self.groups,
                },
                GroupingKind::Differential => GroupingStrategy::Differential {
                    epsilon: self.epsilon,
                },
            },
            workflow,
            budget: self.budget,
            seed: self.run_seed(run),
            workers: self.workers,
        }
    }
}
