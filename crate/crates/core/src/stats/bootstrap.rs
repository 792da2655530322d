use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::central_95;
use crate::error::{Error, Result};
use crate::rng::{substream, uniform_index};

pub const DEFAULT_ITERATIONS: usize = 500;

/// Resamples drawn for one iteration before giving up on an undefined metric.
pub const MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub point_estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub iterations: usize,
    pub seed: u64,
    pub samples: Vec<f64>,
}

/// Non-parametric bootstrap of `metric` over evaluation units.
///
/// Iteration `i` draws `units.len()` indices with replacement from substream
/// `i` of `seed` (see [`crate::rng`]), so the samples do not depend on how
/// rayon schedules iterations. If the metric is undefined on a resample, the
/// next resample is drawn from the same substream, up to [`MAX_REDRAWS`].
/// The interval is the 2.5th/97.5th empirical percentile of the samples.
pub fn bootstrap_metric<T, F>(units: &[T], metric: F, iterations: usize, seed: u64) -> Result<BootstrapResult>
where
    T: Sync,
    F: Fn(&[&T]) -> Result<f64> + Sync,
{
    if units.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "bootstrap needs at least 2 units, got {}",
            units.len()
        )));
    }
    if iterations == 0 {
        return Err(Error::InvalidInput("bootstrap iterations must be positive".into()));
    }
    let all: Vec<&T> = units.iter().collect();
    let point_estimate = metric(&all)?;

    let n = units.len();
    let samples = (0..iterations)
        .into_par_iter()
        .map(|iteration| {
            let mut rng = substream(seed, iteration as u64);
            let mut resample: Vec<&T> = Vec::with_capacity(n);
            for _ in 0..MAX_REDRAWS {
                resample.clear();
                resample.extend((0..n).map(|_| &units[uniform_index(&mut rng, n)]));
                if let Ok(v) = metric(&resample) {
                    return Ok(v);
                }
            }
            Err(Error::BootstrapExhausted {
                iteration,
                attempts: MAX_REDRAWS,
            })
        })
        .collect::<Result<Vec<f64>>>()?;

    let (ci_low, ci_high) = central_95(&samples);
    Ok(BootstrapResult {
        point_estimate,
        ci_low,
        ci_high,
        iterations,
        seed,
        samples,
    })
}
