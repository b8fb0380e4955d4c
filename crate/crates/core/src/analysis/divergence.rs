use crate::error::{Error, Result};
use crate::rng::Draws;

/// Per-iteration retention probability `p` and group count `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceParams {
    pub p: f64,
    pub m: usize,
}

impl DivergenceParams {
    pub fn new(p: f64, m: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("p = {p} is not a probability")));
        }
        if m == 0 {
            return Err(Error::InvalidParameter("M must be at least 1".into()));
        }
        Ok(Self { p, m })
    }

    fn serial_exponent(&self) -> i32 {
        (self.m * (self.m - 1) / 2) as i32
    }
}

/// `1 − p^(M(M−1)/2)`: chance that a serial context deviates from the
/// all-previous one.
pub fn div_serial(params: DivergenceParams) -> f64 {
    1.0 - params.p.powi(params.serial_exponent())
}

/// `1 − p^(M(M−1))` for the stale-parallel context.
pub fn div_parallel(params: DivergenceParams) -> f64 {
    1.0 - params.p.powi(2 * params.serial_exponent())
}

/// `div_parallel / div_serial`, which simplifies to `1 + p^(M(M−1)/2)`.
pub fn gap_ratio(params: DivergenceParams) -> Result<f64> {
    if params.m < 2 || params.p <= 0.0 || params.p >= 1.0 {
        return Err(Error::Undefined(format!(
            "gap ratio needs M >= 2 and 0 < p < 1 (got p = {}, M = {})",
            params.p, params.m
        )));
    }
    Ok(div_parallel(params) / div_serial(params))
}

/// Monte-Carlo frequencies of the two divergence events.
///
/// Each trial draws, for every ordered pair `(i, j)` with `i != j`, whether
/// group `j`'s best survived the iteration as seen by group `i`. The serial
/// event fails if any pair with `j > i` fails; the parallel event if any pair
/// fails at all.
pub fn simulate_divergence<D: Draws>(params: DivergenceParams, trials: u64, draws: &mut D) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let m = params.m;
    let (mut serial, mut parallel) = (0u64, 0u64);
    for _ in 0..trials {
        let mut upper_ok = true;
        let mut all_ok = true;
        'pairs: for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                // strict `<` so p = 1 never fails and p = 0 always does
                let kept = draws.uniform() < params.p;
                if !kept {
                    all_ok = false;
                    if j > i {
                        upper_ok = false;
                        break 'pairs;
                    }
                }
            }
        }
        if !upper_ok {
            serial += 1;
            parallel += 1;
        } else if !all_ok {
            parallel += 1;
        }
    }
    Ok((serial as f64 / trials as f64, parallel as f64 / trials as f64))
}
