//! Bland-Altman test-retest analysis.
//!
//! Each session with two or more images contributes one point: the pair of
//! images with the largest absolute score difference. Limits of agreement are
//! the empirical 2.5th and 97.5th percentiles of the signed differences.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::percentile_sorted;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredImage {
    pub image_id: String,
    pub score: f64,
    pub class: usize,
}

/// Scores and classes of all images of one subject in one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSession {
    pub subject_id: String,
    pub session_id: String,
    pub images: Vec<ScoredImage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlandAltmanPoint {
    pub subject_id: String,
    pub session_id: String,
    pub mean_score: f64,
    /// `score(image_lo) - score(image_hi)`.
    pub diff: f64,
    /// Lexicographically smaller image id of the selected pair.
    pub image_lo: String,
    pub image_hi: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatabilityReport {
    pub points: Vec<BlandAltmanPoint>,
    pub loa_low: f64,
    pub loa_high: f64,
    /// `(loa_high - loa_low) / (2 * range)`.
    pub loa_halfwidth_normalized: f64,
    /// `(loa_high - loa_low) / range`.
    pub loa_width_normalized: f64,
    /// `max(|loa_low|, |loa_high|) / range`.
    pub loa_max_abs_normalized: f64,
    pub disagreement_rate: f64,
    pub n_sessions: usize,
    /// Sessions with fewer than two images, left out of the analysis.
    pub skipped_sessions: usize,
}

fn max_difference_point(session: &ScoredSession) -> Option<BlandAltmanPoint> {
    if session.images.len() < 2 {
        return None;
    }
    let mut images: Vec<&ScoredImage> = session.images.iter().collect();
    images.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    let mut best: Option<(usize, usize)> = None;
    let mut best_abs = f64::NEG_INFINITY;
    for i in 0..images.len() {
        for j in i + 1..images.len() {
            let d = (images[i].score - images[j].score).abs();
            if d > best_abs {
                best_abs = d;
                best = Some((i, j));
            }
        }
    }
    let (i, j) = best?;
    let (lo, hi) = (images[i], images[j]);
    Some(BlandAltmanPoint {
        subject_id: session.subject_id.clone(),
        session_id: session.session_id.clone(),
        mean_score: 0.5 * (lo.score + hi.score),
        diff: lo.score - hi.score,
        image_lo: lo.image_id.clone(),
        image_hi: hi.image_id.clone(),
    })
}

/// One point per session with at least two images; also returns how many
/// sessions were skipped for having fewer.
///
/// Ties between equally distant pairs resolve to the first pair in
/// lexicographic image order.
pub fn bland_altman_points<'a, I>(sessions: I) -> (Vec<BlandAltmanPoint>, usize)
where
    I: IntoIterator<Item = &'a ScoredSession>,
{
    let mut skipped = 0;
    let mut points = Vec::new();
    for s in sessions {
        match max_difference_point(s) {
            Some(p) => points.push(p),
            None => skipped += 1,
        }
    }
    (points, skipped)
}

/// Non-parametric 95% limits of agreement.
pub fn limits_of_agreement(diffs: &[f64]) -> Result<(f64, f64)> {
    if diffs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "limits of agreement need at least 2 differences, got {}",
            diffs.len()
        )));
    }
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidInput("differences must be finite".into()));
    }
    let mut sorted = diffs.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok((percentile_sorted(&sorted, 0.025), percentile_sorted(&sorted, 0.975)))
}

/// Fraction of test-retest sessions whose images do not all share one class.
pub fn disagreement_rate<'a, I>(sessions: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a ScoredSession>,
{
    let mut eligible = 0usize;
    let mut disagreeing = 0usize;
    for s in sessions {
        if s.images.len() < 2 {
            continue;
        }
        eligible += 1;
        let classes: BTreeSet<usize> = s.images.iter().map(|i| i.class).collect();
        if classes.len() > 1 {
            disagreeing += 1;
        }
    }
    if eligible == 0 {
        return Err(Error::InsufficientData("no session has two or more images".into()));
    }
    Ok(disagreeing as f64 / eligible as f64)
}

/// Bland-Altman points, limits of agreement and disagreement rate over the
/// same sessions. `range` is the width of the score's value range.
pub fn repeatability_report(sessions: &[ScoredSession], range: f64) -> Result<RepeatabilityReport> {
    if !(range > 0.0) {
        return Err(Error::InvalidInput(format!("score range must be positive, got {range}")));
    }
    let (points, skipped_sessions) = bland_altman_points(sessions);
    let diffs: Vec<f64> = points.iter().map(|p| p.diff).collect();
    let (loa_low, loa_high) = limits_of_agreement(&diffs)?;
    let disagreement_rate = disagreement_rate(sessions)?;
    Ok(RepeatabilityReport {
        n_sessions: points.len(),
        points,
        loa_low,
        loa_high,
        loa_halfwidth_normalized: (loa_high - loa_low) / (2.0 * range),
        loa_width_normalized: (loa_high - loa_low) / range,
        loa_max_abs_normalized: loa_low.abs().max(loa_high.abs()) / range,
        disagreement_rate,
        skipped_sessions,
    })
}
