//! (1+1) mutation and step-size adaptation shared by every optimizer.

use std::f64::consts::SQRT_2;

use crate::rng::Draws;

/// Initial step size of every lane variable or CC group.
pub const INITIAL_SIGMA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutationOperator {
    Gaussian,
    Cauchy,
}

/// Gaussian iff `u > 0.5`; the boundary goes to Cauchy.
pub fn choose_operator(u: f64) -> MutationOperator {
    if u > 0.5 {
        MutationOperator::Gaussian
    } else {
        MutationOperator::Cauchy
    }
}

pub fn gaussian_mutate(parent: f64, sigma: f64, z: f64) -> f64 {
    parent + sigma * z
}

pub fn cauchy_mutate(parent: f64, sigma: f64, c: f64) -> f64 {
    parent + sigma * c
}

/// `exp((1/√2)(θ − 1/5))` for a success (`θ = 1`) or a failure (`θ = 0`).
pub fn one_fifth_factor(success: bool) -> f64 {
    let theta = if success { 1.0 } else { 0.0 };
    ((theta - 0.2) / SQRT_2).exp()
}

/// Multiplies `sigma` by the 1/5-rule factor when the offspring moved.
/// The result is kept inside the positive normal range.
pub fn update_sigma(sigma: f64, moved: bool, success: bool) -> f64 {
    if !moved {
        return sigma;
    }
    (sigma * one_fifth_factor(success)).clamp(f64::MIN_POSITIVE, f64::MAX)
}

/// Draws an operator, mutates `parent` and clamps into `[lower, upper]`.
/// Consumes one uniform and then one normal or one Cauchy draw.
pub fn mutate<D: Draws + ?Sized>(
    parent: f64,
    sigma: f64,
    lower: f64,
    upper: f64,
    draws: &mut D,
) -> (f64, MutationOperator) {
    let op = choose_operator(draws.uniform());
    let raw = match op {
        MutationOperator::Gaussian => gaussian_mutate(parent, sigma, draws.normal()),
        MutationOperator::Cauchy => cauchy_mutate(parent, sigma, draws.cauchy()),
    };
    (clamp(raw, lower, upper), op)
}

/// Nearest-bound clamping; NaN (from ∞·0) collapses onto the lower bound.
pub fn clamp(x: f64, lower: f64, upper: f64) -> f64 {
    if x.is_nan() {
        lower
    } else {
        x.clamp(lower, upper)
    }
}
