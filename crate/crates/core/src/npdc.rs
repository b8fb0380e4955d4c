//! NPDC: every variable is its own subproblem, searched by a (1+1) step
//! whose offspring is pre-selected by a two-probability meta-model before a
//! single merged evaluation per lane decides whether the whole move stands.
//!
//! `λ` lanes run side by side without sharing state. Within a lane the
//! per-variable work runs on the executor between barriers:
//!
//! 1. mutate and pre-select every variable (parallel),
//! 2. evaluate the merged vector once (charged),
//! 3. update models and step sizes, revert on failure (parallel).

use std::f64::consts::SQRT_2;
use std::time::{Duration, Instant};

use crate::budget::Budget;
use crate::cc::random_point;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::problems::{spin_for, Objective};
use crate::record::{RunRecord, Timing, TrajectoryRecorder};
use crate::rng::{Draws, RngStream, StreamKind};
use crate::search_kernel::{mutate, update_sigma, INITIAL_SIGMA};

/// Acceptance probabilities for an offspring smaller (`ps`) or larger (`pl`)
/// than its parent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaModel {
    pub ps: f64,
    pub pl: f64,
}

impl MetaModel {
    pub const INITIAL: MetaModel = MetaModel { ps: 1.0, pl: 1.0 };
    pub const RANDOM: MetaModel = MetaModel { ps: 0.5, pl: 0.5 };

    pub fn floor(dimension: usize) -> f64 {
        (2.0 / dimension as f64).min(1.0)
    }
}

impl Default for MetaModel {
    fn default() -> Self {
        Self::INITIAL
    }
}

/// Where the offspring value lies relative to its parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffspringSide {
    Smaller,
    Larger,
    Equal,
}

impl OffspringSide {
    pub fn of(parent: f64, offspring: f64) -> Self {
        if offspring < parent {
            Self::Smaller
        } else if offspring > parent {
            Self::Larger
        } else {
            Self::Equal
        }
    }
}

/// Pre-selection: accept a smaller offspring iff `r <= ps`, a larger one iff
/// `r <= pl`; a tie keeps the parent.
pub fn meta_select(parent: f64, offspring: f64, model: MetaModel, r: f64) -> f64 {
    meta_select_with(parent, offspring, model, r, SelectionRule::AcceptBelow)
}

pub fn meta_select_with(parent: f64, offspring: f64, model: MetaModel, r: f64, rule: SelectionRule) -> f64 {
    let p = match OffspringSide::of(parent, offspring) {
        OffspringSide::Smaller => model.ps,
        OffspringSide::Larger => model.pl,
        OffspringSide::Equal => return parent,
    };
    let accept = match rule {
        SelectionRule::AcceptBelow => r <= p,
        SelectionRule::AcceptAbove => p < r,
    };
    if accept {
        offspring
    } else {
        parent
    }
}

/// 1/5-rule update of the probability for `side`, clamped to `[2/D, 1]`.
pub fn meta_update(model: MetaModel, side: OffspringSide, theta: bool, dimension: usize) -> MetaModel {
    let lo = MetaModel::floor(dimension);
    let factor = ((if theta { 1.0 } else { 0.0 } - 0.2) / SQRT_2).exp();
    let step = |p: f64| (p * factor).clamp(lo, 1.0);
    match side {
        OffspringSide::Smaller => MetaModel {
            ps: step(model.ps),
            ..model
        },
        OffspringSide::Larger => MetaModel {
            pl: step(model.pl),
            ..model
        },
        OffspringSide::Equal => model,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    #[default]
    Standard,
    /// `PS = PL = 0.5` for the whole run, no model updates.
    RandomMeta,
}

/// Direction of the pre-selection test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionRule {
    /// Accept the offspring when `r <= P`.
    #[default]
    AcceptBelow,
    /// Accept the offspring when `P < r`.
    AcceptAbove,
}

/// Per-iteration switches shared by every lane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IterationOptions {
    pub variant: Variant,
    /// When true, every variable whose offspring differed from its parent is
    /// updated from the merged outcome, including those the pre-selection
    /// rejected. When false (the default) only variables that actually
    /// changed are updated.
    pub update_rejected: bool,
    /// Busy-wait per variable, standing in for an expensive subproblem.
    pub subproblem_cost: Duration,
    pub selection: SelectionRule,
}

impl IterationOptions {
    pub fn standard() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableState {
    pub best: f64,
    pub sigma: f64,
    pub model: MetaModel,
    previous: f64,
    side: OffspringSide,
    moved: bool,
    selected: bool,
    meta_updates: u64,
}

impl VariableState {
    fn new(best: f64, model: MetaModel) -> Self {
        Self {
            best,
            sigma: INITIAL_SIGMA,
            model,
            previous: best,
            side: OffspringSide::Equal,
            moved: false,
            selected: false,
            meta_updates: 0,
        }
    }
}

/// One independent (1+1) search over all `D` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub index: usize,
    pub vars: Vec<VariableState>,
    /// `f` of the lane's accepted merged vector.
    pub fb: f64,
}

impl Lane {
    /// `fb` must be `f(bests)`.
    pub fn new(index: usize, bests: &[f64], fb: f64, variant: Variant) -> Self {
        let model = match variant {
            Variant::Standard => MetaModel::INITIAL,
            Variant::RandomMeta => MetaModel::RANDOM,
        };
        Self {
            index,
            vars: bests.iter().map(|&b| VariableState::new(b, model)).collect(),
            fb,
        }
    }

    pub fn bests(&self) -> Vec<f64> {
        self.vars.iter().map(|v| v.best).collect()
    }

    /// Total `meta_update` calls that changed or could change a model.
    pub fn meta_update_count(&self) -> u64 {
        self.vars.iter().map(|v| v.meta_updates).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationReport {
    pub value: f64,
    pub theta: bool,
    /// Seconds spent in the merged evaluation.
    pub evaluation_time: f64,
}

/// One iteration of one lane. `streams[j]` drives variable `j`; per variable
/// it consumes the operator draw, the step draw and the selection draw.
/// Refused without touching the lane when the budget is exhausted.
pub fn npdc_iteration<O, S>(
    lane: &mut Lane,
    problem: &O,
    budget: &mut Budget,
    streams: &mut [S],
    executor: &Executor,
    options: &IterationOptions,
) -> Result<IterationReport>
where
    O: Objective + ?Sized,
    S: Draws + Send,
{
    let d = problem.dimension();
    if lane.vars.len() != d || streams.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: if lane.vars.len() != d { lane.vars.len() } else { streams.len() },
        });
    }
    if budget.is_exhausted() {
        return Err(Error::BudgetExhausted {
            limit: budget.limit(),
            used: budget.used(),
            requested: 1,
        });
    }
    let (lower, upper) = (problem.lower(), problem.upper());
    let cost = options.subproblem_cost;

    executor.for_each_pair(&mut lane.vars, streams, |j, var, stream| {
        let parent = var.best;
        let (offspring, _) = mutate(parent, var.sigma, lower[j], upper[j], stream);
        let r = stream.uniform();
        var.previous = parent;
        var.side = OffspringSide::of(parent, offspring);
        var.moved = offspring != parent;
        var.best = meta_select_with(parent, offspring, var.model, r, options.selection);
        var.selected = var.best != parent;
        if !cost.is_zero() {
            spin_for(cost);
        }
    });

    let merged = lane.bests();
    budget.try_charge(1)?;
    let started = Instant::now();
    let value = problem.evaluate(&merged);
    let evaluation_time = started.elapsed().as_secs_f64();
    let value = match value {
        Ok(v) => v,
        Err(e) => {
            for var in &mut lane.vars {
                var.best = var.previous;
            }
            return Err(e);
        }
    };
    let theta = value < lane.fb;

    executor.for_each(&mut lane.vars, |_, var| {
        if var.side != OffspringSide::Equal && (options.update_rejected || var.selected) {
            if options.variant == Variant::Standard {
                var.model = meta_update(var.model, var.side, theta, d);
                var.meta_updates += 1;
            }
            var.sigma = update_sigma(var.sigma, var.moved, theta);
        }
        if !theta {
            var.best = var.previous;
        }
    });
    if theta {
        lane.fb = value;
    }
    Ok(IterationReport {
        value,
        theta,
        evaluation_time,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NpdcConfig {
    /// Evaluation budget `T`.
    pub budget: u64,
    pub lambda: usize,
    pub seed: u64,
    pub workers: usize,
    pub options: IterationOptions,
}

impl NpdcConfig {
    pub fn new(budget: u64, seed: u64) -> Self {
        Self {
            budget,
            lambda: 1,
            seed,
            workers: 1,
            options: IterationOptions::standard(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self.options.variant {
            Variant::Standard => "NPDC",
            Variant::RandomMeta => "NPDC-random",
        }
    }
}

/// Result of [`run_npdc`] with the lanes kept for inspection.
#[derive(Debug, Clone)]
pub struct NpdcRun {
    pub record: RunRecord,
    pub lanes: Vec<Lane>,
}

/// A complete seeded NPDC run returning the best lane's merged vector.
pub fn run_npdc<O: Objective + ?Sized>(problem: &O, config: &NpdcConfig) -> Result<RunRecord> {
    run_npdc_detailed(problem, config).map(|r| r.record)
}

pub fn run_npdc_detailed<O: Objective + ?Sized>(problem: &O, config: &NpdcConfig) -> Result<NpdcRun> {
    let d = problem.dimension();
    let lambda = config.lambda;
    if lambda == 0 {
        return Err(Error::InvalidParameter("lambda must be at least 1".into()));
    }
    if config.budget < 2 * lambda as u64 {
        return Err(Error::InvalidParameter(format!(
            "budget {} is below 2 x lambda = {}",
            config.budget,
            2 * lambda
        )));
    }
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let executor = Executor::new(config.workers)?;
    let started = Instant::now();
    let optimum = problem.optimum_value();
    let mut budget = Budget::new(config.budget);
    let mut recorder = TrajectoryRecorder::default();
    let mut evaluation_time = 0.0;

    let mut lanes = Vec::with_capacity(lambda);
    let mut streams: Vec<Vec<RngStream>> = Vec::with_capacity(lambda);
    for i in 0..lambda {
        let mut init = RngStream::for_kind(config.seed, StreamKind::Init, i as u64, 0);
        let x0 = random_point(problem.lower(), problem.upper(), &mut init);
        budget.try_charge(1)?;
        let t = Instant::now();
        let f0 = problem.evaluate(&x0)?;
        evaluation_time += t.elapsed().as_secs_f64();
        lanes.push(Lane::new(i, &x0, f0, config.options.variant));
        streams.push(
            (0..d as u64)
                .map(|j| RngStream::for_kind(config.seed, StreamKind::LaneVariable, i as u64, j))
                .collect(),
        );
    }
    let best_fb = |lanes: &[Lane]| lanes.iter().map(|l| l.fb).fold(f64::INFINITY, f64::min);
    recorder.observe(budget.used(), best_fb(&lanes) - optimum);

    let mut iterations = 0;
    'outer: loop {
        for (lane, lane_streams) in lanes.iter_mut().zip(&mut streams) {
            if budget.is_exhausted() {
                break 'outer;
            }
            let report =
                npdc_iteration(lane, problem, &mut budget, lane_streams, &executor, &config.options)?;
            evaluation_time += report.evaluation_time;
        }
        iterations += 1;
        recorder.observe(budget.used(), best_fb(&lanes) - optimum);
    }
    recorder.observe(budget.used(), best_fb(&lanes) - optimum);

    let winner = lanes
        .iter()
        .min_by(|a, b| a.fb.total_cmp(&b.fb))
        .expect("at least one lane");
    let record = RunRecord {
        algorithm: config.label().to_string(),
        problem: problem.label(),
        seed: config.seed,
        budget: config.budget,
        consumed: budget.used(),
        trajectory: recorder.finish(budget.used()),
        final_error: winner.fb - optimum,
        best_solution: winner.bests(),
        timing: Timing {
            total_time: started.elapsed().as_secs_f64(),
            evaluation_time,
            iteration_count: iterations,
            workers: executor.workers(),
        },
    };
    Ok(NpdcRun { record, lanes })
}
