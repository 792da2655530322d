//! Test-retest repeatability and calibration analysis for classification-style
//! predictors, with a small simulation lab for Monte Carlo dropout experiments.
//!
//! The evaluation pipeline runs bottom-up through these modules:
//!
//! * [`records`]: per-image prediction records (one row per MC sample) and labels.
//! * [`scoring`]: MC aggregation, continuous severity scores and class assignment.
//! * [`repeatability`]: Bland-Altman pairing, non-parametric limits of agreement,
//!   classification disagreement rate.
//! * [`metrics`]: accuracy, quadratic weighted kappa, Brier score, reliability curves.
//! * [`stats`]: bootstrap confidence intervals, Welch's t-test, Shapiro-Wilk.
//! * [`evaluation`]: the full report pipeline and report comparison.
//! * [`simlab`]: synthetic test-retest cohorts, a dropout MLP, MC sweeps and the
//!   end-to-end simulated experiment.

pub mod error;
pub mod evaluation;
pub mod metrics;
pub mod records;
pub mod repeatability;
pub mod report;
pub mod rng;
pub mod scoring;
pub mod simlab;
pub mod stats;

pub use error::{Error, Result};
pub use evaluation::{
    compare_reports, evaluate, Comparison, Evaluation, EvaluationConfig, EvaluationReport,
};
pub use records::{
    group_by_session, load_labels, load_records, HeadKind, ImageKey, LabelSet, McIndex,
    PredictionRecord, RecordFormat, RecordSet, SessionGroup,
};
pub use repeatability::{BlandAltmanPoint, RepeatabilityReport};
pub use scoring::{AggregatedPrediction, Inference, SeverityScore};
pub use stats::{BootstrapResult, TestMethod, TestResult};
