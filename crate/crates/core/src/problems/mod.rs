//! Benchmark problems with planted separability structure.
//!
//! Instances follow the large-scale benchmark recipe: the input is shifted by
//! `o`, permuted by `π`, and the permuted coordinates are split into
//! components. Nonseparable components use a naturally nonseparable base
//! (Schwefel 1.2, Rosenbrock, Ackley) or an orthogonally rotated separable one
//! (elliptic, Rastrigin). Whatever is left over uses an additively separable
//! base, so every leftover variable is its own interaction group.

mod functions;

pub use functions::{ackley, elliptic, rastrigin, rosenbrock, schwefel_1_2, sphere};

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::decomposition::Grouping;
use crate::error::{Error, Result};
use crate::rng::{Draws, RngStream, StreamKind};

/// Weight applied to the single nonseparable group, as in the benchmark suite
/// this generator mirrors.
pub const SINGLE_GROUP_WEIGHT: f64 = 1e6;

/// A bounded minimization target.
pub trait Objective: Sync {
    fn dimension(&self) -> usize;
    fn lower(&self) -> &[f64];
    fn upper(&self) -> &[f64];
    /// Pure evaluation. Budget accounting is the caller's job.
    fn evaluate(&self, x: &[f64]) -> Result<f64>;
    fn optimum_value(&self) -> f64 {
        0.0
    }
    fn label(&self) -> String {
        "custom".to_string()
    }
}

/// Validates length and finiteness of a candidate.
pub fn check_input(x: &[f64], dimension: usize) -> Result<()> {
    if x.len() != dimension {
        return Err(Error::DimensionMismatch {
            expected: dimension,
            actual: x.len(),
        });
    }
    if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { index, value });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseFunction {
    Elliptic,
    Rastrigin,
    Ackley,
    #[serde(rename = "schwefel-1.2")]
    Schwefel12,
    Rosenbrock,
    Sphere,
}

impl BaseFunction {
    pub const ALL: [BaseFunction; 6] = [
        BaseFunction::Elliptic,
        BaseFunction::Rastrigin,
        BaseFunction::Ackley,
        BaseFunction::Schwefel12,
        BaseFunction::Rosenbrock,
        BaseFunction::Sphere,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaseFunction::Elliptic => "elliptic",
            BaseFunction::Rastrigin => "rastrigin",
            BaseFunction::Ackley => "ackley",
            BaseFunction::Schwefel12 => "schwefel-1.2",
            BaseFunction::Rosenbrock => "rosenbrock",
            BaseFunction::Sphere => "sphere",
        }
    }

    pub fn default_bounds(self) -> (f64, f64) {
        match self {
            BaseFunction::Rastrigin => (-5.0, 5.0),
            BaseFunction::Ackley => (-32.0, 32.0),
            _ => (-100.0, 100.0),
        }
    }

    pub fn apply(self, z: &[f64]) -> f64 {
        match self {
            BaseFunction::Elliptic => elliptic(z),
            BaseFunction::Rastrigin => rastrigin(z),
            BaseFunction::Ackley => ackley(z),
            BaseFunction::Schwefel12 => schwefel_1_2(z),
            BaseFunction::Rosenbrock => rosenbrock(z),
            BaseFunction::Sphere => sphere(z),
        }
    }

    /// Function used for the additively separable remainder, if any.
    fn separable_form(self) -> Option<BaseFunction> {
        match self {
            BaseFunction::Elliptic | BaseFunction::Rastrigin | BaseFunction::Sphere => Some(self),
            BaseFunction::Schwefel12 | BaseFunction::Rosenbrock => Some(BaseFunction::Sphere),
            // sqrt/exp of means couples every coordinate
            BaseFunction::Ackley => None,
        }
    }

    /// `(function, needs rotation)` for a nonseparable group, if any.
    fn nonseparable_form(self) -> Option<(BaseFunction, bool)> {
        match self {
            BaseFunction::Elliptic | BaseFunction::Rastrigin => Some((self, true)),
            BaseFunction::Ackley | BaseFunction::Schwefel12 | BaseFunction::Rosenbrock => {
                Some((self, false))
            }
            // rotation-invariant, stays separable
            BaseFunction::Sphere => None,
        }
    }
}

impl fmt::Display for BaseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaseFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaseFunction::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown base function '{s}'")))
    }
}

/// Separability class of a generated instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StructureClass {
    FullySeparable,
    /// One nonseparable group of `m` (weighted by [`SINGLE_GROUP_WEIGHT`]) plus a separable rest.
    SingleGroup,
    /// `D/2m` nonseparable groups of `m` plus a separable half.
    HalfGroup,
    /// `D/m` nonseparable groups of `m`.
    KGroup,
    FullyNonseparable,
}

impl StructureClass {
    pub const ALL: [StructureClass; 5] = [
        StructureClass::FullySeparable,
        StructureClass::SingleGroup,
        StructureClass::HalfGroup,
        StructureClass::KGroup,
        StructureClass::FullyNonseparable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StructureClass::FullySeparable => "fully-separable",
            StructureClass::SingleGroup => "single-group",
            StructureClass::HalfGroup => "half-group",
            StructureClass::KGroup => "k-group",
            StructureClass::FullyNonseparable => "fully-nonseparable",
        }
    }

    pub fn uses_group_size(self) -> bool {
        matches!(
            self,
            StructureClass::SingleGroup | StructureClass::HalfGroup | StructureClass::KGroup
        )
    }

    /// Whether `base` can be generated under this class.
    pub fn supports(self, base: BaseFunction) -> bool {
        match self {
            StructureClass::FullySeparable => {
                base.separable_form() == Some(base)
            }
            StructureClass::SingleGroup | StructureClass::HalfGroup => {
                base.nonseparable_form().is_some() && base.separable_form().is_some()
            }
            StructureClass::KGroup => base.nonseparable_form().is_some(),
            StructureClass::FullyNonseparable => {
                matches!(base.nonseparable_form(), Some((_, false)))
            }
        }
    }

    /// Human-readable table of every supported `(class, base)` pair.
    pub fn valid_matrix() -> String {
        StructureClass::ALL
            .iter()
            .map(|c| {
                let bases: Vec<&str> = BaseFunction::ALL
                    .iter()
                    .filter(|b| c.supports(**b))
                    .map(|b| b.name())
                    .collect();
                format!("{}: {}", c.name(), bases.join(", "))
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

impl fmt::Display for StructureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StructureClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StructureClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown structure class '{s}'")))
    }
}

/// Everything needed to regenerate an instance bit-for-bit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemDescriptor {
    pub class: StructureClass,
    pub base: BaseFunction,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_size: Option<usize>,
    pub seed: u64,
}

impl ProblemDescriptor {
    pub fn build(&self) -> Result<ObjectiveProblem> {
        make_problem(self.class, self.base, self.dimension, self.group_size, self.seed)
    }

    pub fn label(&self) -> String {
        match self.group_size {
            Some(m) if self.class.uses_group_size() => format!(
                "{}-{}-d{}-m{}-s{}",
                self.class, self.base, self.dimension, m, self.seed
            ),
            _ => format!("{}-{}-d{}-s{}", self.class, self.base, self.dimension, self.seed),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("descriptor serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Compact form `class:base:D:m:seed` (use `-` for no group size).
    pub fn from_compact(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 5 {
            return Err(Error::Parse(format!(
                "expected class:base:D:m:seed, got '{spec}'"
            )));
        }
        let num = |s: &str, what: &str| -> Result<u64> {
            s.parse::<u64>()
                .map_err(|_| Error::Parse(format!("bad {what} '{s}'")))
        };
        Ok(Self {
            class: parts[0].parse()?,
            base: parts[1].parse()?,
            dimension: num(parts[2], "dimension")? as usize,
            group_size: match parts[3] {
                "-" | "" => None,
                m => Some(num(m, "group size")? as usize),
            },
            seed: num(parts[4], "seed")?,
        })
    }
}

/// A contiguous run of permuted coordinates evaluated by one base function.
#[derive(Debug, Clone, PartialEq)]
struct Component {
    start: usize,
    end: usize,
    function: BaseFunction,
    /// Row-major orthogonal matrix of side `end - start`.
    rotation: Option<Vec<f64>>,
    weight: f64,
    nonseparable: bool,
}

impl Component {
    fn evaluate(&self, y: &[f64], scratch: &mut Vec<f64>) -> f64 {
        let part = &y[self.start..self.end];
        let value = match &self.rotation {
            None => self.function.apply(part),
            Some(rot) => {
                let m = part.len();
                scratch.clear();
                scratch.extend((0..m).map(|r| {
                    let row = &rot[r * m..(r + 1) * m];
                    row.iter().zip(part).map(|(a, b)| a * b).sum::<f64>()
                }));
                self.function.apply(scratch)
            }
        };
        self.weight * value
    }
}

/// A shifted, permuted, component-structured benchmark instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveProblem {
    descriptor: Option<ProblemDescriptor>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    shift: Vec<f64>,
    /// `y[k] = (x - o)[permutation[k]]`.
    permutation: Vec<usize>,
    components: Vec<Component>,
}

impl ObjectiveProblem {
    /// A single unrotated component over all `D` variables with explicit shift and permutation.
    pub fn custom(base: BaseFunction, shift: Vec<f64>, permutation: Vec<usize>) -> Result<Self> {
        let d = shift.len();
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let (lo, hi) = base.default_bounds();
        let problem = Self {
            descriptor: None,
            lower: vec![lo; d],
            upper: vec![hi; d],
            shift,
            permutation: Vec::new(),
            components: vec![Component {
                start: 0,
                end: d,
                function: base,
                rotation: None,
                weight: 1.0,
                nonseparable: base.separable_form() != Some(base),
            }],
        };
        problem.with_permutation(permutation)
    }

    /// Same components, different permutation. Drops the descriptor.
    pub fn with_permutation(mut self, permutation: Vec<usize>) -> Result<Self> {
        validate_permutation(&permutation, self.dimension())?;
        self.permutation = permutation;
        self.descriptor = None;
        Ok(self)
    }

    /// Same components, different shift. Drops the descriptor.
    pub fn with_shift(mut self, shift: Vec<f64>) -> Result<Self> {
        check_input(&shift, self.dimension())?;
        self.shift = shift;
        self.descriptor = None;
        Ok(self)
    }

    pub fn descriptor(&self) -> Option<&ProblemDescriptor> {
        self.descriptor.as_ref()
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// The planted minimizer.
    pub fn optimum(&self) -> &[f64] {
        &self.shift
    }

    /// Planted nonseparable groups as original variable indices.
    pub fn nonseparable_groups(&self) -> Vec<Vec<usize>> {
        self.components
            .iter()
            .filter(|c| c.nonseparable)
            .map(|c| {
                let mut g: Vec<usize> = self.permutation[c.start..c.end].to_vec();
                g.sort_unstable();
                g
            })
            .collect()
    }
}

impl Objective for ObjectiveProblem {
    fn dimension(&self) -> usize {
        self.shift.len()
    }

    fn lower(&self) -> &[f64] {
        &self.lower
    }

    fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        check_input(x, self.dimension())?;
        let y: Vec<f64> = self
            .permutation
            .iter()
            .map(|&p| x[p] - self.shift[p])
            .collect();
        let mut scratch = Vec::new();
        Ok(self
            .components
            .iter()
            .map(|c| c.evaluate(&y, &mut scratch))
            .sum())
    }

    fn label(&self) -> String {
        match &self.descriptor {
            Some(d) => d.label(),
            None => "custom".to_string(),
        }
    }
}

fn validate_permutation(permutation: &[usize], dimension: usize) -> Result<()> {
    if permutation.len() != dimension {
        return Err(Error::DimensionMismatch {
            expected: dimension,
            actual: permutation.len(),
        });
    }
    let mut seen = vec![false; dimension];
    for &p in permutation {
        if p >= dimension || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidParameter(format!(
                "permutation is not a bijection (index {p})"
            )));
        }
    }
    Ok(())
}

fn random_rotation(m: usize, rng: &mut RngStream) -> Vec<f64> {
    let gauss = DMatrix::from_fn(m, m, |_, _| rng.normal());
    let q = gauss.qr().q();
    // row-major
    (0..m)
        .flat_map(|r| (0..m).map(move |c| (r, c)))
        .map(|(r, c)| q[(r, c)])
        .collect()
}

/// Generates a seeded instance. Deterministic in all arguments.
pub fn make_problem(
    class: StructureClass,
    base: BaseFunction,
    dimension: usize,
    group_size: Option<usize>,
    seed: u64,
) -> Result<ObjectiveProblem> {
    if !class.supports(base) {
        return Err(Error::UnsupportedCombination {
            class: class.name().to_string(),
            base: base.name().to_string(),
            valid: StructureClass::valid_matrix(),
        });
    }
    if dimension < 2 {
        return Err(Error::InvalidParameter(format!(
            "dimension must be at least 2, got {dimension}"
        )));
    }
    let m = if class.uses_group_size() {
        let m = group_size.ok_or_else(|| {
            Error::InvalidParameter(format!("class {class} requires a group size"))
        })?;
        let ok = match class {
            StructureClass::SingleGroup => m >= 2 && m < dimension,
            StructureClass::HalfGroup => m >= 2 && dimension.is_multiple_of(2 * m),
            _ => m >= 2 && dimension.is_multiple_of(m),
        };
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "group size {m} does not fit class {class} at dimension {dimension}"
            )));
        }
        m
    } else {
        dimension
    };

    let mut rng = RngStream::for_kind(seed, StreamKind::Problem, 0, 0);
    let (lo, hi) = base.default_bounds();
    let span = hi - lo;
    let shift: Vec<f64> = (0..dimension)
        .map(|_| lo + span * (0.1 + 0.8 * rng.uniform()))
        .collect();
    let mut permutation: Vec<usize> = (0..dimension).collect();
    permutation.shuffle(rng.rng());

    let group = |start: usize, weight: f64, rng: &mut RngStream| {
        let (function, rotate) = base.nonseparable_form().expect("checked by supports()");
        Component {
            start,
            end: start + m,
            function,
            rotation: rotate.then(|| random_rotation(m, rng)),
            weight,
            nonseparable: true,
        }
    };
    let rest = |start: usize| Component {
        start,
        end: dimension,
        function: base.separable_form().expect("checked by supports()"),
        rotation: None,
        weight: 1.0,
        nonseparable: false,
    };

    let components = match class {
        StructureClass::FullySeparable => vec![rest(0)],
        StructureClass::SingleGroup => vec![group(0, SINGLE_GROUP_WEIGHT, &mut rng), rest(m)],
        StructureClass::HalfGroup => {
            let k = dimension / (2 * m);
            let mut cs: Vec<Component> = (0..k).map(|g| group(g * m, 1.0, &mut rng)).collect();
            cs.push(rest(k * m));
            cs
        }
        StructureClass::KGroup => (0..dimension / m)
            .map(|g| group(g * m, 1.0, &mut rng))
            .collect(),
        StructureClass::FullyNonseparable => vec![Component {
            start: 0,
            end: dimension,
            function: base,
            rotation: None,
            weight: 1.0,
            nonseparable: true,
        }],
    };

    Ok(ObjectiveProblem {
        descriptor: Some(ProblemDescriptor {
            class,
            base,
            dimension,
            group_size,
            seed,
        }),
        lower: vec![lo; dimension],
        upper: vec![hi; dimension],
        shift,
        permutation,
        components,
    })
}

/// The planted partition: every nonseparable group, plus singletons for the rest.
pub fn true_interaction_groups(problem: &ObjectiveProblem) -> Grouping {
    let d = problem.dimension();
    let mut covered = vec![false; d];
    let mut groups = problem.nonseparable_groups();
    for g in &groups {
        for &i in g {
            covered[i] = true;
        }
    }
    groups.extend((0..d).filter(|&i| !covered[i]).map(|i| vec![i]));
    Grouping::new(groups, d)
        .expect("planted groups form a partition")
        .canonical()
}

/// Objective defined by a closure, for ad-hoc problems and tests.
pub struct FnObjective<F> {
    lower: Vec<f64>,
    upper: Vec<f64>,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, f: F) -> Self {
        assert_eq!(lower.len(), upper.len());
        Self { lower, upper, f }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn dimension(&self) -> usize {
        self.lower.len()
    }

    fn lower(&self) -> &[f64] {
        &self.lower
    }

    fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        check_input(x, self.dimension())?;
        Ok((self.f)(x))
    }
}

/// Wraps an objective and spins for a fixed time on every call, to emulate
/// an expensive black box.
pub struct CostlyObjective<O> {
    inner: O,
    cost: Duration,
}

impl<O: Objective> CostlyObjective<O> {
    pub fn new(inner: O, cost: Duration) -> Self {
        Self { inner, cost }
    }
}

/// Busy-waits (does not sleep) for `cost`.
pub fn spin_for(cost: Duration) {
    if cost.is_zero() {
        return;
    }
    let start = Instant::now();
    while start.elapsed() < cost {
        std::hint::spin_loop();
    }
}

impl<O: Objective> Objective for CostlyObjective<O> {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn lower(&self) -> &[f64] {
        self.inner.lower()
    }

    fn upper(&self) -> &[f64] {
        self.inner.upper()
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        spin_for(self.cost);
        self.inner.evaluate(x)
    }

    fn optimum_value(&self) -> f64 {
        self.inner.optimum_value()
    }

    fn label(&self) -> String {
        self.inner.label()
    }
}
