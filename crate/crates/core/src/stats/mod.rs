//! Bootstrap confidence intervals and the two hypothesis tests used to
//! compare models: Welch's t-test and the Shapiro-Wilk normality test.

mod bootstrap;
mod shapiro;
mod welch;

use serde::{Deserialize, Serialize};

pub use bootstrap::{bootstrap_metric, BootstrapResult, DEFAULT_ITERATIONS, MAX_REDRAWS};
pub use shapiro::shapiro_wilk;
pub use welch::welch_t_test;

/// Significance level used for every test in the crate.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    WelchT,
    ShapiroWilk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: TestMethod,
}

impl TestResult {
    pub fn is_significant(&self) -> bool {
        self.p_value < ALPHA
    }
}

/// Empirical quantile of a sorted sample by linear interpolation between
/// order statistics at the one-based rank `q * (n - 1) + 1`.
///
/// `sorted` must be non-empty and ascending; `q` lies in `[0, 1]`.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&q));
    let n = sorted.len();
    let rank = q * (n - 1) as f64 + 1.0;
    let r = rank.floor();
    let frac = rank - r;
    let r = r as usize;
    if r >= n {
        return sorted[n - 1];
    }
    sorted[r - 1] + frac * (sorted[r] - sorted[r - 1])
}

/// Sorts a copy of `values` (total order, NaN last) and returns the
/// 2.5th and 97.5th percentiles.
pub fn central_95(values: &[f64]) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    (percentile_sorted(&sorted, 0.025), percentile_sorted(&sorted, 0.975))
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance.
pub(crate) fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_endpoints_and_interpolation() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile_sorted(&x, 0.0), 1.0);
        assert_eq!(percentile_sorted(&x, 1.0), 5.0);
        assert_eq!(percentile_sorted(&x, 0.5), 3.0);
        assert_eq!(percentile_sorted(&x, 0.3), 2.2);
        assert_eq!(percentile_sorted(&[7.0], 0.975), 7.0);
    }

    #[test]
    fn central_interval_of_81_points() {
        let x: Vec<f64> = (0..81).map(|i| -1.0 + i as f64 / 40.0).collect();
        let (lo, hi) = central_95(&x);
        assert!((lo + 0.95).abs() < 1e-12 && (hi - 0.95).abs() < 1e-12);
    }
}
