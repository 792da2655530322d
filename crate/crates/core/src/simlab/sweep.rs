//! Repeatability and accuracy as a function of the number of MC samples.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{point_metrics, score_sessions, PointMetrics};
use crate::records::{LabelSet, RecordSet};
use crate::report::{csv_string, format_float, format_optional, write_csv_rows};
use crate::scoring::Inference;

pub const SWEEP_HEADER: [&str; 5] = ["n_mc", "loa", "disagreement", "accuracy", "kappa"];

/// Default sample counts of a sweep.
pub const DEFAULT_SWEEP: [usize; 9] = [1, 2, 5, 10, 15, 20, 30, 40, 50];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// `None` for the deterministic baseline.
    pub n_mc: Option<usize>,
    pub metrics: PointMetrics,
}

/// One row per entry of `ns` in the given order, then the deterministic
/// baseline row.
pub fn mc_sweep(records: &RecordSet, labels: &LabelSet, ns: &[usize]) -> Result<Vec<SweepRow>> {
    if ns.is_empty() || ns.contains(&0) {
        return Err(Error::InvalidInput("sample counts must be positive and non-empty".into()));
    }
    let row = |inference| -> Result<PointMetrics> { point_metrics(&score_sessions(records, labels, inference, None)?) };
    let mut rows = ns
        .iter()
        .map(|&n| {
            Ok(SweepRow {
                n_mc: Some(n),
                metrics: row(Inference::MonteCarlo(n))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.push(SweepRow {
        n_mc: None,
        metrics: row(Inference::Deterministic)?,
    });
    Ok(rows)
}

/// CSV rows; the baseline is written with `n_mc = -1`, the records sentinel.
fn csv_rows(rows: &[SweepRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.n_mc.map_or_else(|| "-1".to_string(), |n| n.to_string()),
                format_float(r.metrics.loa),
                format_float(r.metrics.disagreement),
                format_float(r.metrics.accuracy),
                format_optional(r.metrics.kappa),
            ]
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    csv_string(&SWEEP_HEADER, &csv_rows(rows))
}

pub fn write_sweep_csv(path: impl AsRef<Path>, rows: &[SweepRow]) -> Result<()> {
    write_csv_rows(path, &SWEEP_HEADER, &csv_rows(rows))
}
