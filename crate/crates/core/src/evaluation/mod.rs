//! End-to-end evaluation of a record set: repeatability, classification and
//! calibration metrics, each with a bootstrap confidence interval over
//! sessions, plus comparison of two reports.

mod compare;
mod output;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{self, CalibrationReport, ConfusionMatrix, DEFAULT_BINS};
use crate::records::{group_by_session, HeadKind, ImageKey, LabelSet, RecordSet};
use crate::repeatability::{self, BlandAltmanPoint, ScoredImage, ScoredSession};
use crate::scoring::{self, Inference};
use crate::stats::{bootstrap_metric, BootstrapResult, DEFAULT_ITERATIONS};

pub use compare::{compare_reports, Comparison, MetricComparison};
pub use output::{bland_altman_csv, calibration_csv, write_evaluation, BLAND_ALTMAN_FILE, CALIBRATION_FILE, REPORT_FILE};

pub const DEFAULT_N_MC: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationConfig {
    pub inference: Inference,
    pub bootstrap_iterations: usize,
    pub seed: u64,
    pub n_bins: usize,
    /// Class index from which outcomes count as positive in the reliability
    /// curve; defaults to `k / 2`.
    pub positive_boundary: Option<usize>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            inference: Inference::MonteCarlo(DEFAULT_N_MC),
            bootstrap_iterations: DEFAULT_ITERATIONS,
            seed: 0,
            n_bins: DEFAULT_BINS,
            positive_boundary: None,
        }
    }
}

/// Ground truth and probability views of one scored image, aligned with
/// [`ScoredSession::images`].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTruth {
    pub label: usize,
    /// `[p]` for binary heads, per-class probabilities for multi-class and
    /// ordinal heads, `None` for regression.
    pub brier_probabilities: Option<Vec<f64>>,
    pub positive_probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutcome {
    pub scored: ScoredSession,
    pub truth: Vec<ImageTruth>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCohort {
    pub head: HeadKind,
    pub positive_boundary: usize,
    pub sessions: Vec<SessionOutcome>,
}

/// Aggregates, scores and classifies every image and attaches its label.
pub fn score_sessions(
    records: &RecordSet,
    labels: &LabelSet,
    inference: Inference,
    positive_boundary: Option<usize>,
) -> Result<ScoredCohort> {
    let head = records
        .head()
        .ok_or_else(|| Error::InsufficientData("record set is empty".into()))?;
    let k = head.num_classes();
    let boundary = positive_boundary.unwrap_or_else(|| scoring::default_positive_boundary(k));
    if boundary == 0 || boundary >= k {
        return Err(Error::InvalidInput(format!("positive boundary {boundary} outside [1, {}]", k - 1)));
    }

    let mut missing = Vec::new();
    let mut sessions = Vec::new();
    for group in group_by_session(records) {
        let mut images = Vec::with_capacity(group.images.len());
        let mut truth = Vec::with_capacity(group.images.len());
        for image in &group.images {
            let agg = inference.aggregate(&image.records)?;
            let key = ImageKey {
                subject_id: group.subject_id.clone(),
                session_id: group.session_id.clone(),
                image_id: image.image_id.clone(),
            };
            let Some(label) = labels.get(&key) else {
                missing.push(key.to_string());
                continue;
            };
            if label >= k {
                return Err(Error::InvalidInput(format!("label {label} of image {key} outside [0, {}]", k - 1)));
            }
            images.push(ScoredImage {
                image_id: image.image_id.clone(),
                score: scoring::severity_score(&agg).value,
                class: scoring::assign_class(&agg),
            });
            let brier_probabilities = match head {
                HeadKind::Binary => Some(vec![agg.outputs[0]]),
                _ => scoring::class_probabilities(&agg),
            };
            truth.push(ImageTruth {
                label,
                brier_probabilities,
                positive_probability: scoring::positive_probability(&agg, boundary),
            });
        }
        sessions.push(SessionOutcome {
            scored: ScoredSession {
                subject_id: group.subject_id,
                session_id: group.session_id,
                images,
            },
            truth,
        });
    }
    if !missing.is_empty() {
        return Err(Error::MissingLabels(missing));
    }
    Ok(ScoredCohort {
        head,
        positive_boundary: boundary,
        sessions,
    })
}

fn score_range(head: HeadKind) -> f64 {
    let (lo, hi) = head.score_range();
    hi - lo
}

fn flat_labels_and_classes(sessions: &[&SessionOutcome]) -> (Vec<usize>, Vec<usize>) {
    sessions
        .iter()
        .flat_map(|s| s.truth.iter().zip(&s.scored.images).map(|(t, i)| (t.label, i.class)))
        .unzip()
}

pub fn disagreement_metric(sessions: &[&SessionOutcome]) -> Result<f64> {
    repeatability::disagreement_rate(sessions.iter().map(|s| &s.scored))
}

/// Half-width of the 95% limits of agreement as a fraction of the score range.
pub fn loa_metric(head: HeadKind, sessions: &[&SessionOutcome]) -> Result<f64> {
    let (points, _) = repeatability::bland_altman_points(sessions.iter().map(|s| &s.scored));
    let diffs: Vec<f64> = points.iter().map(|p| p.diff).collect();
    let (lo, hi) = repeatability::limits_of_agreement(&diffs)?;
    Ok((hi - lo) / (2.0 * score_range(head)))
}

pub fn accuracy_metric(sessions: &[&SessionOutcome]) -> Result<f64> {
    let (labels, classes) = flat_labels_and_classes(sessions);
    metrics::accuracy(&labels, &classes)
}

pub fn kappa_metric(head: HeadKind, sessions: &[&SessionOutcome]) -> Result<f64> {
    let (labels, classes) = flat_labels_and_classes(sessions);
    metrics::quadratic_weighted_kappa(&ConfusionMatrix::from_pairs(head.num_classes(), &labels, &classes)?)
}

/// `None` for regression heads.
pub fn brier_metric(sessions: &[&SessionOutcome]) -> Option<Result<f64>> {
    let mut labels = Vec::new();
    let mut probs = Vec::new();
    for (t, _) in sessions.iter().flat_map(|s| s.truth.iter().zip(&s.scored.images)) {
        labels.push(t.label);
        probs.push(t.brier_probabilities.clone()?);
    }
    Some(metrics::brier_score(&labels, &probs))
}

/// Point estimates without resampling, as used in MC sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMetrics {
    pub loa: f64,
    pub disagreement: f64,
    pub accuracy: f64,
    /// `None` when kappa is undefined on this sample.
    pub kappa: Option<f64>,
    pub brier: Option<f64>,
}

pub fn point_metrics(cohort: &ScoredCohort) -> Result<PointMetrics> {
    let all: Vec<&SessionOutcome> = cohort.sessions.iter().collect();
    Ok(PointMetrics {
        loa: loa_metric(cohort.head, &all)?,
        disagreement: disagreement_metric(&all)?,
        accuracy: accuracy_metric(&all)?,
        kappa: match kappa_metric(cohort.head, &all) {
            Ok(k) => Some(k),
            Err(Error::KappaUndefined) => None,
            Err(e) => return Err(e),
        },
        brier: brier_metric(&all).transpose()?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: Vec<f64>,
}

impl From<BootstrapResult> for MetricSummary {
    fn from(r: BootstrapResult) -> Self {
        Self {
            point: r.point_estimate,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            samples: r.samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub disagreement_rate: MetricSummary,
    pub loa_normalized: MetricSummary,
    pub kappa: MetricSummary,
    pub accuracy: MetricSummary,
    pub brier: Option<MetricSummary>,
}

impl MetricSet {
    /// Present metrics in report order.
    pub fn entries(&self) -> Vec<(&'static str, &MetricSummary)> {
        let mut v = vec![
            ("disagreement_rate", &self.disagreement_rate),
            ("loa_normalized", &self.loa_normalized),
            ("kappa", &self.kappa),
            ("accuracy", &self.accuracy),
        ];
        if let Some(b) = &self.brier {
            v.push(("brier", b));
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceInfo {
    pub mode: String,
    pub n_mc: Option<usize>,
}

impl From<Inference> for InferenceInfo {
    fn from(i: Inference) -> Self {
        match i {
            Inference::MonteCarlo(n) => Self {
                mode: "monte_carlo".into(),
                n_mc: Some(n),
            },
            Inference::Deterministic => Self {
                mode: "deterministic".into(),
                n_mc: None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInfo {
    pub iterations: usize,
    pub seed: u64,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoaSummary {
    pub low: f64,
    pub high: f64,
    pub halfwidth_normalized: f64,
    pub width_normalized: f64,
    pub max_abs_normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub head: String,
    pub k: usize,
    pub inference: InferenceInfo,
    pub n_images: usize,
    pub n_sessions: usize,
    pub n_test_retest_sessions: usize,
    pub skipped_sessions: usize,
    pub bootstrap: BootstrapInfo,
    pub limits_of_agreement: LoaSummary,
    pub confusion_matrix: ConfusionMatrix,
    pub metrics: MetricSet,
    pub calibration: Option<CalibrationReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvaluationReport,
    pub bland_altman: Vec<BlandAltmanPoint>,
}

/// Full evaluation with bootstrap confidence intervals.
///
/// Every metric is bootstrapped over sessions with the same seed, so all
/// metrics see the same resamples.
pub fn evaluate(records: &RecordSet, labels: &LabelSet, cfg: &EvaluationConfig) -> Result<Evaluation> {
    let cohort = score_sessions(records, labels, cfg.inference, cfg.positive_boundary)?;
    evaluate_scored(&cohort, cfg)
}

pub fn evaluate_scored(cohort: &ScoredCohort, cfg: &EvaluationConfig) -> Result<Evaluation> {
    let head = cohort.head;
    let units = &cohort.sessions;
    let all: Vec<&SessionOutcome> = units.iter().collect();
    let scored: Vec<ScoredSession> = units.iter().map(|s| s.scored.clone()).collect();
    let rep = repeatability::repeatability_report(&scored, score_range(head))?;

    let (iters, seed) = (cfg.bootstrap_iterations, cfg.seed);
    let boot = |f: &(dyn Fn(&[&SessionOutcome]) -> Result<f64> + Sync)| -> Result<MetricSummary> {
        Ok(bootstrap_metric(units, |s: &[&SessionOutcome]| f(s), iters, seed)?.into())
    };
    let metrics = MetricSet {
        disagreement_rate: boot(&disagreement_metric)?,
        loa_normalized: boot(&|s| loa_metric(head, s))?,
        kappa: boot(&|s| kappa_metric(head, s))?,
        accuracy: boot(&accuracy_metric)?,
        brier: match brier_metric(&all) {
            None => None,
            Some(_) => Some(boot(&|s| brier_metric(s).expect("probabilities present"))?),
        },
    };

    let (labels, classes) = flat_labels_and_classes(&all);
    let confusion_matrix = ConfusionMatrix::from_pairs(head.num_classes(), &labels, &classes)?;
    let calibration = calibration_report(cohort, cfg.n_bins)?;

    let report = EvaluationReport {
        head: head.name().to_string(),
        k: head.num_classes(),
        inference: cfg.inference.into(),
        n_images: labels.len(),
        n_sessions: units.len(),
        n_test_retest_sessions: rep.n_sessions,
        skipped_sessions: rep.skipped_sessions,
        bootstrap: BootstrapInfo {
            iterations: iters,
            seed,
            unit: "session".into(),
        },
        limits_of_agreement: LoaSummary {
            low: rep.loa_low,
            high: rep.loa_high,
            halfwidth_normalized: rep.loa_halfwidth_normalized,
            width_normalized: rep.loa_width_normalized,
            max_abs_normalized: rep.loa_max_abs_normalized,
        },
        confusion_matrix,
        metrics,
        calibration,
    };
    Ok(Evaluation {
        report,
        bland_altman: rep.points,
    })
}

/// Brier score and reliability curve of the positive-class reduction, or
/// `None` for regression heads.
pub fn calibration_report(cohort: &ScoredCohort, n_bins: usize) -> Result<Option<CalibrationReport>> {
    let all: Vec<&SessionOutcome> = cohort.sessions.iter().collect();
    let Some(brier) = brier_metric(&all).transpose()? else {
        return Ok(None);
    };
    let mut outcomes = Vec::new();
    let mut probs = Vec::new();
    for t in all.iter().flat_map(|s| &s.truth) {
        let Some(p) = t.positive_probability else {
            return Ok(None);
        };
        outcomes.push(t.label >= cohort.positive_boundary);
        probs.push(p);
    }
    Ok(Some(CalibrationReport {
        positive_boundary: cohort.positive_boundary,
        brier,
        bins: metrics::calibration_curve(&outcomes, &probs, n_bins)?,
    }))
}
