//! Context-vector cooperative coevolution: the DC-NG / DC-RG / DC-DG
//! baselines in a serial (fresh context) and a stale-parallel workflow.
//!
//! Each group runs a (1+1) search with one scalar step size. A mutant partial
//! solution is spliced into the context vector and compared against the
//! incumbent's value under that same context.
//!
//! * Serial: groups run in index order; group `i` sees the bests of groups
//!   `< i` from this iteration and of groups `> i` from the previous one. The
//!   incumbent's value under that context is always the current merged value,
//!   so no extra evaluations are needed.
//! * Parallel: every group sees the previous iteration's merged bests. When
//!   two or more groups are accepted in the same iteration the merged value is
//!   unknown, and one evaluation of the merged vector is charged at the barrier.

use std::time::Instant;

use crate::budget::Budget;
use crate::decomposition::{differential_grouping, natural_grouping, random_grouping, Grouping};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::problems::Objective;
use crate::record::{RunRecord, Timing, TrajectoryRecorder};
use crate::rng::{Draws, RngStream, StreamKind};
use crate::search_kernel::{mutate, update_sigma, INITIAL_SIGMA};
use crate::timing::TimedObjective;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroupingStrategy {
    Natural,
    /// Redrawn every iteration into `groups` equal blocks.
    Random { groups: usize },
    /// Computed once up front; probes are charged to the run budget.
    Differential { epsilon: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Workflow {
    Serial,
    Parallel,
}

/// Which iteration a context slot was taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Updated best from the current iteration.
    Current,
    /// Best carried over from the previous iteration.
    Previous,
    /// The slot being optimized.
    Candidate,
}

/// A full assignment used to complement partial solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextVector {
    pub values: Vec<f64>,
    /// One tag per group, indexed like the grouping.
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemState {
    pub group: Vec<usize>,
    pub best: Vec<f64>,
    pub sigma: f64,
    /// Incumbent's objective value under the context it was last compared in.
    pub value: f64,
    outcome: Option<Result<bool>>,
}

impl SubproblemState {
    fn new(group: Vec<usize>, merged: &[f64], sigma: f64, value: f64) -> Self {
        let best = group.iter().map(|&i| merged[i]).collect();
        Self {
            group,
            best,
            sigma,
            value,
            outcome: None,
        }
    }
}

/// Splices `partial` into `context` at `group`, charges one evaluation and
/// evaluates the full vector. `context` is left untouched.
pub fn evaluate_partial<O: Objective + ?Sized>(
    problem: &O,
    context: &[f64],
    group: &[usize],
    partial: &[f64],
    budget: &mut Budget,
) -> Result<f64> {
    if partial.len() != group.len() {
        return Err(Error::DimensionMismatch {
            expected: group.len(),
            actual: partial.len(),
        });
    }
    budget.try_charge(1)?;
    splice_evaluate(problem, context, group, partial)
}

fn splice_evaluate<O: Objective + ?Sized>(
    problem: &O,
    context: &[f64],
    group: &[usize],
    partial: &[f64],
) -> Result<f64> {
    let mut x = context.to_vec();
    for (&i, &v) in group.iter().zip(partial) {
        x[i] = v;
    }
    problem.evaluate(&x)
}

/// Mutates every variable of the group with the group's step size.
fn mutate_group<D: Draws + ?Sized>(
    sub: &SubproblemState,
    lower: &[f64],
    upper: &[f64],
    draws: &mut D,
) -> (Vec<f64>, bool) {
    let offspring: Vec<f64> = sub
        .group
        .iter()
        .zip(&sub.best)
        .map(|(&i, &b)| mutate(b, sub.sigma, lower[i], upper[i], draws).0)
        .collect();
    let moved = offspring != sub.best;
    (offspring, moved)
}

/// Group states plus the merged best assembled from them.
#[derive(Debug, Clone)]
pub struct CcState {
    subproblems: Vec<SubproblemState>,
    merged: Vec<f64>,
    merged_value: f64,
    trace: Option<Vec<ContextVector>>,
}

/// What one sweep did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepReport {
    pub groups_processed: usize,
    pub accepted: usize,
    pub evaluations: u64,
    /// False when the budget ran out before every group was processed.
    pub complete: bool,
    /// The merged value had to be evaluated without budget (run is over).
    pub uncharged_refresh: bool,
}

impl CcState {
    /// `initial_value` must be `f(initial)`.
    pub fn new(grouping: &Grouping, initial: Vec<f64>, initial_value: f64) -> Result<Self> {
        if grouping.dimension() != initial.len() {
            return Err(Error::DimensionMismatch {
                expected: grouping.dimension(),
                actual: initial.len(),
            });
        }
        let subproblems = grouping
            .groups()
            .iter()
            .map(|g| SubproblemState::new(g.clone(), &initial, INITIAL_SIGMA, initial_value))
            .collect();
        Ok(Self {
            subproblems,
            merged: initial,
            merged_value: initial_value,
            trace: None,
        })
    }

    /// Rebuilds the group states from the merged best. Step sizes stay with
    /// their group slot.
    pub fn regroup(&mut self, grouping: &Grouping) -> Result<()> {
        if grouping.dimension() != self.merged.len() {
            return Err(Error::DimensionMismatch {
                expected: self.merged.len(),
                actual: grouping.dimension(),
            });
        }
        let sigmas: Vec<f64> = self.subproblems.iter().map(|s| s.sigma).collect();
        self.subproblems = grouping
            .groups()
            .iter()
            .enumerate()
            .map(|(k, g)| {
                let sigma = sigmas.get(k).copied().unwrap_or(INITIAL_SIGMA);
                SubproblemState::new(g.clone(), &self.merged, sigma, self.merged_value)
            })
            .collect();
        Ok(())
    }

    pub fn subproblems(&self) -> &[SubproblemState] {
        &self.subproblems
    }

    pub fn merged(&self) -> &[f64] {
        &self.merged
    }

    pub fn merged_value(&self) -> f64 {
        self.merged_value
    }

    /// Record the context of every group evaluation in subsequent steps.
    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    /// Contexts recorded during the most recent step, in group order.
    pub fn trace(&self) -> Option<&[ContextVector]> {
        self.trace.as_deref()
    }

    fn record_context(&mut self, context: &[f64], tags: Vec<Provenance>) {
        if let Some(t) = &mut self.trace {
            t.push(ContextVector {
                values: context.to_vec(),
                provenance: tags,
            });
        }
    }

    fn write_back(&mut self, k: usize) {
        let sub = &self.subproblems[k];
        for (&i, &v) in sub.group.iter().zip(&sub.best) {
            self.merged[i] = v;
        }
    }
}

/// One sweep of the serial workflow. `streams[k]` drives group `k`.
pub fn cc_step_serial<O, S>(
    state: &mut CcState,
    problem: &O,
    budget: &mut Budget,
    streams: &mut [S],
) -> Result<StepReport>
where
    O: Objective + ?Sized,
    S: Draws,
{
    let m = state.subproblems.len();
    if streams.len() < m {
        return Err(Error::InvalidParameter(format!(
            "{m} groups but only {} streams",
            streams.len()
        )));
    }
    if let Some(t) = &mut state.trace {
        t.clear();
    }
    let (lower, upper) = (problem.lower(), problem.upper());
    let mut report = StepReport::default();
    for k in 0..m {
        if budget.is_exhausted() {
            return Ok(report);
        }
        if state.trace.is_some() {
            let tags = (0..m)
                .map(|j| match j.cmp(&k) {
                    std::cmp::Ordering::Less => Provenance::Current,
                    std::cmp::Ordering::Equal => Provenance::Candidate,
                    std::cmp::Ordering::Greater => Provenance::Previous,
                })
                .collect();
            let ctx = state.merged.clone();
            state.record_context(&ctx, tags);
        }
        let sub = &mut state.subproblems[k];
        sub.value = state.merged_value;
        let (offspring, moved) = mutate_group(sub, lower, upper, &mut streams[k]);
        let value = evaluate_partial(problem, &state.merged, &sub.group, &offspring, budget)?;
        report.evaluations += 1;
        report.groups_processed += 1;
        let success = value < sub.value;
        sub.sigma = update_sigma(sub.sigma, moved, success);
        if success {
            sub.best = offspring;
            sub.value = value;
            state.merged_value = value;
            state.write_back(k);
            report.accepted += 1;
        }
    }
    report.complete = true;
    Ok(report)
}

/// One iteration of the stale-parallel workflow. Groups run concurrently on
/// `executor` against the frozen previous-iteration context and are merged at
/// the barrier. Results do not depend on the worker count.
pub fn cc_step_parallel<O, S>(
    state: &mut CcState,
    problem: &O,
    budget: &mut Budget,
    streams: &mut [S],
    executor: &Executor,
) -> Result<StepReport>
where
    O: Objective + ?Sized,
    S: Draws + Send,
{
    let m = state.subproblems.len();
    if streams.len() < m {
        return Err(Error::InvalidParameter(format!(
            "{m} groups but only {} streams",
            streams.len()
        )));
    }
    if let Some(t) = &mut state.trace {
        t.clear();
    }
    let n = (budget.remaining().min(m as u64)) as usize;
    let mut report = StepReport::default();
    if n == 0 {
        return Ok(report);
    }
    budget.try_charge(n as u64)?;
    report.evaluations = n as u64;
    report.groups_processed = n;
    report.complete = n == m;

    let frozen = state.merged.clone();
    let previous_value = state.merged_value;
    if state.trace.is_some() {
        for k in 0..n {
            let tags = (0..m)
                .map(|j| {
                    if j == k {
                        Provenance::Candidate
                    } else {
                        Provenance::Previous
                    }
                })
                .collect();
            state.record_context(&frozen, tags);
        }
    }
    let (lower, upper) = (problem.lower(), problem.upper());
    executor.for_each_pair(
        &mut state.subproblems[..n],
        &mut streams[..n],
        |_, sub, stream| {
            sub.value = previous_value;
            let (offspring, moved) = mutate_group(sub, lower, upper, stream);
            let outcome = splice_evaluate(problem, &frozen, &sub.group, &offspring).map(|value| {
                let success = value < sub.value;
                sub.sigma = update_sigma(sub.sigma, moved, success);
                if success {
                    sub.best = offspring;
                    sub.value = value;
                }
                success
            });
            sub.outcome = Some(outcome);
        },
    );

    let mut last_value = previous_value;
    for k in 0..n {
        match state.subproblems[k].outcome.take() {
            Some(Ok(true)) => {
                report.accepted += 1;
                last_value = state.subproblems[k].value;
                state.write_back(k);
            }
            Some(Ok(false)) => {}
            Some(Err(e)) => return Err(e),
            None => unreachable!("every scheduled group reports an outcome"),
        }
    }
    state.merged_value = match report.accepted {
        0 => previous_value,
        1 => last_value,
        _ => {
            if budget.try_charge(1).is_ok() {
                report.evaluations += 1;
            } else {
                report.uncharged_refresh = true;
            }
            problem.evaluate(&state.merged)?
        }
    };
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcConfig {
    pub grouping: GroupingStrategy,
    pub workflow: Workflow,
    /// Evaluation budget `T`.
    pub budget: u64,
    pub seed: u64,
    pub workers: usize,
}

impl CcConfig {
    /// `DC-NG`, `DC-RG-P`, ...
    pub fn label(&self) -> String {
        let g = match self.grouping {
            GroupingStrategy::Natural => "NG",
            GroupingStrategy::Random { .. } => "RG",
            GroupingStrategy::Differential { .. } => "DG",
        };
        match self.workflow {
            Workflow::Serial => format!("DC-{g}"),
            Workflow::Parallel => format!("DC-{g}-P"),
        }
    }
}

/// Uniform initial point inside the bounds.
pub(crate) fn random_point<D: Draws>(lower: &[f64], upper: &[f64], draws: &mut D) -> Vec<f64> {
    lower
        .iter()
        .zip(upper)
        .map(|(lo, hi)| lo + (hi - lo) * draws.uniform())
        .collect()
}

/// A complete seeded baseline run.
pub fn run_cc<O: Objective + ?Sized>(problem: &O, config: &CcConfig) -> Result<RunRecord> {
    let d = problem.dimension();
    if config.budget < d as u64 {
        return Err(Error::InvalidParameter(format!(
            "budget {} is below one sweep (D = {d})",
            config.budget
        )));
    }
    if let GroupingStrategy::Random { groups } = config.grouping {
        if groups == 0 || !d.is_multiple_of(groups) {
            return Err(Error::InvalidParameter(format!(
                "random grouping with {groups} groups does not divide D = {d}"
            )));
        }
    }
    let executor = match config.workflow {
        Workflow::Serial => Executor::sequential(),
        Workflow::Parallel => Executor::new(config.workers)?,
    };
    let started = Instant::now();
    let timed = TimedObjective::new(problem);
    let optimum = problem.optimum_value();
    let mut budget = Budget::new(config.budget);
    let mut recorder = TrajectoryRecorder::default();

    let mut init = RngStream::for_kind(config.seed, StreamKind::Init, 0, 0);
    let x0 = random_point(problem.lower(), problem.upper(), &mut init);
    budget.try_charge(1)?;
    let f0 = timed.evaluate(&x0)?;
    recorder.observe(budget.used(), f0 - optimum);

    let mut regroup_rng = RngStream::for_kind(config.seed, StreamKind::Grouping, 0, 0);
    let grouping = match config.grouping {
        GroupingStrategy::Natural => natural_grouping(d),
        GroupingStrategy::Random { groups } => random_grouping(d, groups, regroup_rng.rng())?,
        GroupingStrategy::Differential { epsilon } => {
            differential_grouping(&timed, epsilon, &mut budget).map_err(|e| match e {
                Error::BudgetExhausted { .. } => Error::InvalidParameter(format!(
                    "budget {} cannot cover differential grouping probes",
                    config.budget
                )),
                other => other,
            })?
        }
    };
    let mut streams: Vec<RngStream> = (0..grouping.len() as u64)
        .map(|k| RngStream::for_kind(config.seed, StreamKind::GroupSlot, 0, k))
        .collect();
    let mut state = CcState::new(&grouping, x0, f0)?;

    let mut iterations = 0;
    let mut first = true;
    while !budget.is_exhausted() {
        if let (GroupingStrategy::Random { groups }, false) = (config.grouping, first) {
            state.regroup(&random_grouping(d, groups, regroup_rng.rng())?)?;
        }
        first = false;
        let report = match config.workflow {
            Workflow::Serial => cc_step_serial(&mut state, &timed, &mut budget, &mut streams)?,
            Workflow::Parallel => {
                cc_step_parallel(&mut state, &timed, &mut budget, &mut streams, &executor)?
            }
        };
        if report.groups_processed == 0 {
            break;
        }
        iterations += 1;
        recorder.observe(budget.used(), state.merged_value() - optimum);
    }

    Ok(RunRecord {
        algorithm: config.label(),
        problem: problem.label(),
        seed: config.seed,
        budget: config.budget,
        consumed: budget.used(),
        trajectory: recorder.finish(budget.used()),
        final_error: state.merged_value() - optimum,
        best_solution: state.merged().to_vec(),
        timing: Timing {
            total_time: started.elapsed().as_secs_f64(),
            evaluation_time: timed.seconds(),
            iteration_count: iterations,
            workers: executor.workers(),
        },
    })
}
