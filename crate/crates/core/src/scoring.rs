//! Monte Carlo aggregation, severity scores and class assignment.
//!
//! Raw output vectors are averaged first and only then scored or classified,
//! so every severity score is linear in the per-sample outputs.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::records::{HeadKind, PredictionRecord};

/// How to turn the records of one image into a single prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inference {
    /// Mean of the first `n` MC samples by `mc_index`.
    MonteCarlo(usize),
    /// The dropout-disabled forward pass.
    Deterministic,
}

impl Inference {
    /// Selects the rows this mode uses and aggregates them.
    pub fn aggregate(self, rows: &[PredictionRecord]) -> Result<AggregatedPrediction> {
        let deterministic = |r: &&PredictionRecord| r.mc_index.is_deterministic();
        let selected: Vec<PredictionRecord> = match self {
            Inference::MonteCarlo(_) => rows.iter().filter(|r| !deterministic(r)).cloned().collect(),
            Inference::Deterministic => rows.iter().filter(deterministic).cloned().collect(),
        };
        if selected.is_empty() && self == Inference::Deterministic {
            return Err(Error::InvalidAggregation {
                image: image_name(rows),
                message: "no deterministic row present".into(),
            });
        }
        let n_use = match self {
            Inference::MonteCarlo(n) => n,
            Inference::Deterministic => 1,
        };
        if selected.is_empty() {
            return Err(Error::InsufficientSamples {
                image: image_name(rows),
                requested: n_use,
                available: 0,
            });
        }
        aggregate_mc(&selected, n_use)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedPrediction {
    pub head: HeadKind,
    pub outputs: Vec<f64>,
    pub n_samples_used: usize,
    pub deterministic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeverityScore {
    pub value: f64,
    #[serde(skip)]
    pub head: HeadKind,
    pub range_low: f64,
    pub range_high: f64,
}

fn image_name(rows: &[PredictionRecord]) -> String {
    rows.first().map_or_else(|| "<none>".to_string(), |r| r.key().to_string())
}

/// Element-wise mean of the first `n_use` MC rows ordered by `mc_index`.
///
/// A single deterministic row is passed through unchanged and `n_use` is
/// ignored. Mixing deterministic and MC rows is an error.
pub fn aggregate_mc(rows: &[PredictionRecord], n_use: usize) -> Result<AggregatedPrediction> {
    let image = || image_name(rows);
    let Some(first) = rows.first() else {
        return Err(Error::InsufficientSamples {
            image: image(),
            requested: n_use,
            available: 0,
        });
    };
    let head = first.head;
    if rows.iter().any(|r| r.head != head) {
        return Err(Error::InvalidAggregation {
            image: image(),
            message: "rows do not share one head".into(),
        });
    }
    let n_det = rows.iter().filter(|r| r.mc_index.is_deterministic()).count();
    if n_det > 0 {
        if n_det != rows.len() {
            return Err(Error::InvalidAggregation {
                image: image(),
                message: "deterministic and MC rows cannot be aggregated together".into(),
            });
        }
        if n_det > 1 {
            return Err(Error::InvalidAggregation {
                image: image(),
                message: format!("{n_det} deterministic rows, expected exactly one"),
            });
        }
        return Ok(AggregatedPrediction {
            head,
            outputs: first.outputs.clone(),
            n_samples_used: 1,
            deterministic: true,
        });
    }
    if n_use == 0 {
        return Err(Error::InvalidInput("n_use must be at least 1".into()));
    }
    if rows.len() < n_use {
        return Err(Error::InsufficientSamples {
            image: image(),
            requested: n_use,
            available: rows.len(),
        });
    }

    let mut ordered: Vec<&PredictionRecord> = rows.iter().collect();
    ordered.sort_by_key(|r| r.mc_index);
    let mut sums = vec![0.0; head.output_len()];
    for r in &ordered[..n_use] {
        for (s, v) in sums.iter_mut().zip(&r.outputs) {
            *s += v;
        }
    }
    let n = n_use as f64;
    Ok(AggregatedPrediction {
        head,
        outputs: sums.into_iter().map(|s| s / n).collect(),
        n_samples_used: n_use,
        deterministic: false,
    })
}

/// Continuous severity score of an aggregated prediction.
///
/// Binary and regression heads pass the output through. Multi-class heads use
/// the probability-weighted class index `sum_i p_i * i` (zero-based), ordinal
/// heads the sum of the cumulative unit probabilities.
pub fn severity_score(agg: &AggregatedPrediction) -> SeverityScore {
    let value = match agg.head {
        HeadKind::Binary | HeadKind::Regression(_) => agg.outputs[0],
        HeadKind::MultiClass(_) => agg.outputs.iter().enumerate().map(|(i, p)| p * i as f64).sum(),
        HeadKind::Ordinal(_) => agg.outputs.iter().sum(),
    };
    let (range_low, range_high) = agg.head.score_range();
    SeverityScore {
        value,
        head: agg.head,
        range_low,
        range_high,
    }
}

/// Equal-width class thresholds `(k-1) * j / k`, `j = 1..k-1`, used to bin
/// regression scores.
pub fn regression_thresholds(k: usize) -> Vec<f64> {
    (1..k).map(|j| (k - 1) as f64 * j as f64 / k as f64).collect()
}

/// Discrete class in `[0, k-1]`.
///
/// * binary: 1 iff the probability is at least 0.5
/// * multi-class: argmax, ties to the lowest index
/// * ordinal: number of units with probability above 0.5
/// * regression: number of thresholds strictly below the score, so a score
///   equal to a threshold falls in the lower class
pub fn assign_class(agg: &AggregatedPrediction) -> usize {
    match agg.head {
        HeadKind::Binary => usize::from(agg.outputs[0] >= 0.5),
        HeadKind::MultiClass(_) => {
            let mut best = 0;
            for (i, &p) in agg.outputs.iter().enumerate() {
                if p > agg.outputs[best] {
                    best = i;
                }
            }
            best
        }
        HeadKind::Ordinal(_) => agg.outputs.iter().filter(|&&p| p > 0.5).count(),
        HeadKind::Regression(k) => {
            let s = agg.outputs[0];
            regression_thresholds(k).iter().filter(|&&t| s > t).count()
        }
    }
}

/// Score as a fraction of its head's range, clamped to `[0, 1]`.
pub fn normalize_score(s: &SeverityScore) -> f64 {
    ((s.value - s.range_low) / (s.range_high - s.range_low)).clamp(0.0, 1.0)
}

/// Per-class probabilities, or `None` for regression heads.
///
/// Binary heads yield `[1-p, p]`. Ordinal cumulative probabilities
/// `q_j = P(y > j)` become `p_c = q_{c-1} - q_c`; negative differences from
/// non-monotone units are clipped and the vector renormalized.
pub fn class_probabilities(agg: &AggregatedPrediction) -> Option<Vec<f64>> {
    match agg.head {
        HeadKind::Binary => Some(vec![1.0 - agg.outputs[0], agg.outputs[0]]),
        HeadKind::MultiClass(_) => Some(agg.outputs.clone()),
        HeadKind::Ordinal(k) => {
            let q = &agg.outputs;
            let mut p: Vec<f64> = (0..k)
                .map(|c| {
                    let above = if c == 0 { 1.0 } else { q[c - 1] };
                    let next = if c == k - 1 { 0.0 } else { q[c] };
                    above - next
                })
                .collect();
            if p.iter().any(|&v| v < 0.0) {
                p.iter_mut().for_each(|v| *v = v.max(0.0));
                let total: f64 = p.iter().sum();
                p.iter_mut().for_each(|v| *v /= total);
            }
            Some(p)
        }
        HeadKind::Regression(_) => None,
    }
}

/// Default boundary for binary reductions: classes `>= k/2` are positive.
pub fn default_positive_boundary(k: usize) -> usize {
    k / 2
}

/// Probability that the class is at least `boundary`, or `None` for regression.
pub fn positive_probability(agg: &AggregatedPrediction, boundary: usize) -> Option<f64> {
    match agg.head {
        HeadKind::Binary => Some(agg.outputs[0]),
        HeadKind::MultiClass(_) => Some(agg.outputs[boundary.min(agg.outputs.len())..].iter().sum::<f64>().min(1.0)),
        HeadKind::Ordinal(_) => Some(match boundary {
            0 => 1.0,
            b => agg.outputs.get(b - 1).copied().unwrap_or(0.0),
        }),
        HeadKind::Regression(_) => None,
    }
}
