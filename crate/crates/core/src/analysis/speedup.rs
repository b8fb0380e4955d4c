use crate::error::{Error, Result};

/// Processor count `N` and the evaluation share `T_FE / T_1` of a serial run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedupParams {
    pub processors: usize,
    pub fe_fraction: f64,
}

impl SpeedupParams {
    pub fn new(processors: usize, fe_fraction: f64) -> Result<Self> {
        if processors == 0 {
            return Err(Error::InvalidParameter("processor count must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&fe_fraction) {
            return Err(Error::InvalidParameter(format!(
                "evaluation fraction {fe_fraction} is outside [0, 1]"
            )));
        }
        Ok(Self {
            processors,
            fe_fraction,
        })
    }
}

/// Ideal speed-up when only the non-evaluation share is parallel:
/// `N / (1 + f (N − 1))`.
pub fn speedup_model(params: SpeedupParams) -> f64 {
    let n = params.processors as f64;
    n / (1.0 + params.fe_fraction * (n - 1.0))
}
