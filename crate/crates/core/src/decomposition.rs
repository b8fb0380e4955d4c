//! Exclusive partitions of the decision variables into subproblems.
//!
//! Indices are zero-based everywhere, including the text serialization.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::problems::Objective;

/// Disjoint, covering, nonempty groups of variable indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grouping {
    groups: Vec<Vec<usize>>,
    dimension: usize,
}

impl Grouping {
    pub fn new(groups: Vec<Vec<usize>>, dimension: usize) -> Result<Self> {
        let mut seen = vec![false; dimension];
        let mut count = 0;
        for (k, g) in groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::InvalidGrouping(format!("group {k} is empty")));
            }
            for &i in g {
                if i >= dimension {
                    return Err(Error::InvalidGrouping(format!(
                        "index {i} out of range for dimension {dimension}"
                    )));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidGrouping(format!("index {i} appears twice")));
                }
                count += 1;
            }
        }
        if count != dimension {
            return Err(Error::InvalidGrouping(format!(
                "groups cover {count} of {dimension} variables"
            )));
        }
        Ok(Self { groups, dimension })
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group(&self, k: usize) -> &[usize] {
        &self.groups[k]
    }

    /// Number of groups, `M`.
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    /// Sorted within groups, groups ordered by smallest member.
    pub fn canonical(mut self) -> Self {
        for g in &mut self.groups {
            g.sort_unstable();
        }
        self.groups.sort_unstable_by_key(|g| g[0]);
        self
    }

    /// Group id of every variable.
    pub fn membership(&self) -> Vec<usize> {
        let mut owner = vec![0; self.dimension];
        for (k, g) in self.groups.iter().enumerate() {
            for &i in g {
                owner[i] = k;
            }
        }
        owner
    }

    /// One group per line, space-separated indices.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for g in &self.groups {
            let line: Vec<String> = g.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_lines(text: &str, dimension: usize) -> Result<Self> {
        let groups = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split_whitespace()
                    .map(|t| {
                        t.parse::<usize>()
                            .map_err(|_| Error::Parse(format!("bad index '{t}'")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(groups, dimension)
    }
}

/// `D` singleton groups in index order.
pub fn natural_grouping(dimension: usize) -> Grouping {
    Grouping {
        groups: (0..dimension).map(|i| vec![i]).collect(),
        dimension,
    }
}

/// A uniformly random permutation cut into `groups` equal consecutive blocks.
pub fn random_grouping<R: Rng + ?Sized>(
    dimension: usize,
    groups: usize,
    rng: &mut R,
) -> Result<Grouping> {
    if groups == 0 || dimension == 0 || !dimension.is_multiple_of(groups) {
        return Err(Error::InvalidParameter(format!(
            "random grouping needs M dividing D (D={dimension}, M={groups})"
        )));
    }
    let mut order: Vec<usize> = (0..dimension).collect();
    order.shuffle(rng);
    let size = dimension / groups;
    Ok(Grouping {
        groups: order.chunks(size).map(<[usize]>::to_vec).collect(),
        dimension,
    })
}

/// Fraction of each variable's range used as the probe step.
pub const PROBE_STEP_FRACTION: f64 = 0.1;
/// Relative interaction threshold applied to `max(1, |f(x)|)` at the probe corner.
pub const RELATIVE_EPSILON: f64 = 1e-9;

/// Pairwise finite-difference probes around the lower-bound corner.
pub struct InteractionProbe<'a, O: ?Sized> {
    problem: &'a O,
    base: Vec<f64>,
    base_value: f64,
    single: Vec<f64>,
    step: Vec<f64>,
    evaluations: u64,
}

impl<'a, O: Objective + ?Sized> InteractionProbe<'a, O> {
    /// Evaluates `f(x)` and every `f(x + δe_i)`: `D + 1` evaluations.
    pub fn new(problem: &'a O) -> Result<Self> {
        let d = problem.dimension();
        let base = problem.lower().to_vec();
        let step: Vec<f64> = problem
            .lower()
            .iter()
            .zip(problem.upper())
            .map(|(lo, hi)| PROBE_STEP_FRACTION * (hi - lo))
            .collect();
        let base_value = problem.evaluate(&base)?;
        let mut x = base.clone();
        let mut single = Vec::with_capacity(d);
        for i in 0..d {
            x[i] += step[i];
            single.push(problem.evaluate(&x)?);
            x[i] = base[i];
        }
        Ok(Self {
            problem,
            base,
            base_value,
            single,
            step,
            evaluations: d as u64 + 1,
        })
    }

    pub fn base_value(&self) -> f64 {
        self.base_value
    }

    pub fn default_epsilon(&self) -> f64 {
        RELATIVE_EPSILON * self.base_value.abs().max(1.0)
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// `Δ_ij = f(x + δe_i + δe_j) − f(x + δe_i) − f(x + δe_j) + f(x)`. One evaluation.
    pub fn delta(&mut self, i: usize, j: usize) -> Result<f64> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let mut x = self.base.clone();
        x[a] += self.step[a];
        x[b] += self.step[b];
        let both = self.problem.evaluate(&x)?;
        self.evaluations += 1;
        let delta = (both - self.single[a]) - (self.single[b] - self.base_value);
        if !delta.is_finite() {
            return Err(Error::NonFiniteInteraction { i, j });
        }
        Ok(delta)
    }
}

/// Number of evaluations `differential_grouping` consumes at dimension `D`.
pub fn differential_grouping_cost(dimension: usize) -> u64 {
    let d = dimension as u64;
    1 + d + d * d.saturating_sub(1) / 2
}

/// Groups variables by the transitive closure of detected pairwise
/// interactions. All probe evaluations are charged to `budget` up front.
pub fn differential_grouping<O: Objective + ?Sized>(
    problem: &O,
    epsilon: Option<f64>,
    budget: &mut Budget,
) -> Result<Grouping> {
    let d = problem.dimension();
    if let Some(eps) = epsilon {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {eps}")));
        }
    }
    budget.try_charge(differential_grouping_cost(d))?;
    let mut probe = InteractionProbe::new(problem)?;
    let eps = epsilon.unwrap_or_else(|| probe.default_epsilon());
    let mut sets = DisjointSets::new(d);
    for i in 0..d {
        for j in (i + 1)..d {
            if probe.delta(i, j)?.abs() > eps {
                sets.union(i, j);
            }
        }
    }
    debug_assert_eq!(probe.evaluations(), differential_grouping_cost(d));
    Ok(sets.into_grouping())
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    fn into_grouping(mut self) -> Grouping {
        let n = self.parent.len();
        let mut slot = vec![usize::MAX; n];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let r = self.find(i);
            if slot[r] == usize::MAX {
                slot[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot[r]].push(i);
        }
        Grouping {
            groups,
            dimension: n,
        }
    }
}
