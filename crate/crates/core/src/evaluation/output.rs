use std::path::{Path, PathBuf};

use super::Evaluation;
use crate::error::{Error, Result};
use crate::metrics::CalibrationReport;
use crate::report::{csv_string, format_float, format_optional, to_json_string};
use crate::repeatability::BlandAltmanPoint;

pub const REPORT_FILE: &str = "report.json";
pub const BLAND_ALTMAN_FILE: &str = "bland_altman.csv";
pub const CALIBRATION_FILE: &str = "calibration.csv";

/// `subject_id,session_id,mean,diff`
pub fn bland_altman_csv(points: &[BlandAltmanPoint]) -> Result<String> {
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            vec![
                p.subject_id.clone(),
                p.session_id.clone(),
                format_float(p.mean_score),
                format_float(p.diff),
            ]
        })
        .collect();
    csv_string(&["subject_id", "session_id", "mean", "diff"], &rows)
}

/// `bin_low,bin_high,mean_predicted,empirical_frequency,count`; empty bins
/// leave the mean and frequency cells empty.
pub fn calibration_csv(cal: &CalibrationReport) -> Result<String> {
    let rows: Vec<Vec<String>> = cal
        .bins
        .iter()
        .map(|b| {
            vec![
                format_float(b.bin_low),
                format_float(b.bin_high),
                format_optional(b.mean_predicted),
                format_optional(b.empirical_frequency),
                b.count.to_string(),
            ]
        })
        .collect();
    csv_string(&["bin_low", "bin_high", "mean_predicted", "empirical_frequency", "count"], &rows)
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    std::fs::write(&path, contents).map_err(|e| Error::from(e).in_file(&path))?;
    Ok(path)
}

/// Writes the JSON report, the Bland-Altman points and (when defined) the
/// reliability curve into `dir`; returns the written paths.
pub fn write_evaluation(dir: impl AsRef<Path>, evaluation: &Evaluation) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::from(e).in_file(dir))?;
    let mut written = vec![
        write(dir.join(REPORT_FILE), &to_json_string(&evaluation.report)?)?,
        write(dir.join(BLAND_ALTMAN_FILE), &bland_altman_csv(&evaluation.bland_altman)?)?,
    ];
    if let Some(cal) = &evaluation.report.calibration {
        written.push(write(dir.join(CALIBRATION_FILE), &calibration_csv(cal)?)?);
    }
    Ok(written)
}
