use serde::{Deserialize, Serialize};

use super::EvaluationReport;
use crate::error::{Error, Result};
use crate::stats::{shapiro_wilk, welch_t_test, ALPHA};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub metric: String,
    pub point_a: f64,
    pub point_b: f64,
    pub bootstrap_mean_a: f64,
    pub bootstrap_mean_b: f64,
    pub iterations_a: usize,
    pub iterations_b: usize,
    pub t_statistic: f64,
    pub p_value: f64,
    /// `p_value < alpha`.
    pub significant: bool,
    /// Shapiro-Wilk p-value of each bootstrap distribution; `None` when the
    /// test does not apply (constant samples or size outside 3..=5000).
    pub normality_p_a: Option<f64>,
    pub normality_p_b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub alpha: f64,
    pub metrics: Vec<MetricComparison>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn normality_p(v: &[f64]) -> Option<f64> {
    shapiro_wilk(v).ok().map(|r| r.p_value)
}

/// Welch's t-test between the bootstrap distributions of every metric the
/// two reports share. Both reports must carry the same metric set.
pub fn compare_reports(a: &EvaluationReport, b: &EvaluationReport) -> Result<Comparison> {
    let ea = a.metrics.entries();
    let eb = b.metrics.entries();
    let names_a: Vec<&str> = ea.iter().map(|(n, _)| *n).collect();
    let names_b: Vec<&str> = eb.iter().map(|(n, _)| *n).collect();
    if names_a != names_b {
        return Err(Error::InvalidInput(format!(
            "reports carry different metrics: [{}] vs [{}]",
            names_a.join(", "),
            names_b.join(", ")
        )));
    }
    let metrics = ea
        .iter()
        .zip(&eb)
        .map(|((name, ma), (_, mb))| {
            let test = welch_t_test(&ma.samples, &mb.samples)?;
            Ok(MetricComparison {
                metric: name.to_string(),
                point_a: ma.point,
                point_b: mb.point,
                bootstrap_mean_a: mean(&ma.samples),
                bootstrap_mean_b: mean(&mb.samples),
                iterations_a: ma.samples.len(),
                iterations_b: mb.samples.len(),
                t_statistic: test.statistic,
                p_value: test.p_value,
                significant: test.p_value < ALPHA,
                normality_p_a: normality_p(&ma.samples),
                normality_p_b: normality_p(&mb.samples),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison { alpha: ALPHA, metrics })
}

impl Comparison {
    pub fn get(&self, metric: &str) -> Option<&MetricComparison> {
        self.metrics.iter().find(|m| m.metric == metric)
    }
}
