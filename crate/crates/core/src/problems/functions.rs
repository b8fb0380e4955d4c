//! Base benchmark functions. Every function takes already shifted (and, where
//! applicable, rotated) coordinates and has its minimum 0 at the origin.

use std::f64::consts::{E, PI};

/// Conditioning of the high-conditioned elliptic function.
const ELLIPTIC_CONDITION: f64 = 1e6;

pub fn sphere(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum()
}

/// `Σ (10^6)^((i−1)/(n−1)) z_i²`. A single coordinate gets weight 1.
pub fn elliptic(z: &[f64]) -> f64 {
    let n = z.len();
    if n == 1 {
        return z[0] * z[0];
    }
    let denom = (n - 1) as f64;
    z.iter()
        .enumerate()
        .map(|(i, v)| ELLIPTIC_CONDITION.powf(i as f64 / denom) * v * v)
        .sum()
}

pub fn rastrigin(z: &[f64]) -> f64 {
    z.iter()
        .map(|v| v * v - 10.0 * (2.0 * PI * v).cos() + 10.0)
        .sum()
}

pub fn ackley(z: &[f64]) -> f64 {
    let n = z.len() as f64;
    let sq = z.iter().map(|v| v * v).sum::<f64>() / n;
    let cs = z.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / n;
    20.0 * (1.0 - (-0.2 * sq.sqrt()).exp()) + (E - cs.exp())
}

/// Schwefel's problem 1.2: `Σ_i (Σ_{j≤i} z_j)²`.
pub fn schwefel_1_2(z: &[f64]) -> f64 {
    let mut prefix = 0.0;
    let mut total = 0.0;
    for v in z {
        prefix += v;
        total += prefix * prefix;
    }
    total
}

/// Rosenbrock evaluated at `z + 1`, so the minimum sits at `z = 0`.
pub fn rosenbrock(z: &[f64]) -> f64 {
    z.windows(2)
        .map(|w| {
            let a = w[0] + 1.0;
            let b = w[1] + 1.0;
            100.0 * (a * a - b).powi(2) + (a - 1.0).powi(2)
        })
        .sum()
}
