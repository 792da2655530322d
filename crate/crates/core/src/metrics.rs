//! Classification and calibration metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 10;

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::InvalidInput(format!("length mismatch: {a} labels vs {b} predictions")));
    }
    if a == 0 {
        return Err(Error::InsufficientData("no samples".into()));
    }
    Ok(())
}

/// Fraction of exact matches.
pub fn accuracy(labels: &[usize], predictions: &[usize]) -> Result<f64> {
    check_lengths(labels.len(), predictions.len())?;
    let hits = labels.iter().zip(predictions).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub k: usize,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn from_pairs(k: usize, labels: &[usize], predictions: &[usize]) -> Result<Self> {
        check_lengths(labels.len(), predictions.len())?;
        let mut cm = Self::new(k);
        for (&t, &p) in labels.iter().zip(predictions) {
            cm.add(t, p)?;
        }
        Ok(cm)
    }

    pub fn add(&mut self, truth: usize, predicted: usize) -> Result<()> {
        if truth >= self.k || predicted >= self.k {
            return Err(Error::InvalidInput(format!(
                "class pair ({truth}, {predicted}) outside [0, {}]",
                self.k - 1
            )));
        }
        self.counts[truth][predicted] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Cohen's kappa with quadratic weights `(i - j)^2 / (k - 1)^2`.
pub fn quadratic_weighted_kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let k = cm.k;
    let total = cm.total() as f64;
    if total == 0.0 || k < 2 {
        return Err(Error::KappaUndefined);
    }
    let rows: Vec<f64> = cm.counts.iter().map(|r| r.iter().sum::<u64>() as f64 / total).collect();
    let cols: Vec<f64> = (0..k)
        .map(|j| cm.counts.iter().map(|r| r[j]).sum::<u64>() as f64 / total)
        .collect();
    let norm = ((k - 1) * (k - 1)) as f64;
    let (mut observed, mut expected) = (0.0, 0.0);
    for i in 0..k {
        for j in 0..k {
            let w = ((i as f64 - j as f64).powi(2)) / norm;
            observed += w * cm.counts[i][j] as f64 / total;
            expected += w * rows[i] * cols[j];
        }
    }
    if expected <= 0.0 {
        return Err(Error::KappaUndefined);
    }
    Ok(1.0 - observed / expected)
}

/// Mean squared error between probabilities and one-hot outcomes.
///
/// Length-1 vectors are treated as a binary positive-class probability,
/// giving `mean((p - y)^2)`. Longer vectors use the multi-class sum
/// `mean(sum_c (p_c - [y = c])^2)`.
pub fn brier_score(labels: &[usize], probabilities: &[Vec<f64>]) -> Result<f64> {
    check_lengths(labels.len(), probabilities.len())?;
    let mut total = 0.0;
    for (&y, p) in labels.iter().zip(probabilities) {
        if p.is_empty() || p.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidInput(format!("invalid probability vector {p:?}")));
        }
        if p.len() == 1 {
            if y > 1 {
                return Err(Error::InvalidInput(format!("binary label {y} outside [0, 1]")));
            }
            total += (p[0] - y as f64).powi(2);
        } else {
            if y >= p.len() {
                return Err(Error::InvalidInput(format!("label {y} outside [0, {}]", p.len() - 1)));
            }
            total += p
                .iter()
                .enumerate()
                .map(|(c, &pc)| (pc - if c == y { 1.0 } else { 0.0 }).powi(2))
                .sum::<f64>();
        }
    }
    Ok(total / labels.len() as f64)
}

/// One equal-width reliability bin. Empty bins have `count = 0` and no
/// mean or frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub bin_low: f64,
    pub bin_high: f64,
    pub mean_predicted: Option<f64>,
    pub empirical_frequency: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    /// Class index from which outcomes count as positive.
    pub positive_boundary: usize,
    pub brier: f64,
    pub bins: Vec<CalibrationBin>,
}

/// Reliability curve over `n_bins` equal-width bins on `[0, 1]`; a
/// probability of exactly 1 falls in the top bin.
pub fn calibration_curve(outcomes: &[bool], probabilities: &[f64], n_bins: usize) -> Result<Vec<CalibrationBin>> {
    if n_bins < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 bins, got {n_bins}")));
    }
    check_lengths(outcomes.len(), probabilities.len())?;
    if let Some(p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidInput(format!("probability {p} outside [0, 1]")));
    }
    let mut sums = vec![(0.0, 0usize, 0usize); n_bins];
    for (&y, &p) in outcomes.iter().zip(probabilities) {
        let b = ((p * n_bins as f64) as usize).min(n_bins - 1);
        sums[b].0 += p;
        sums[b].1 += usize::from(y);
        sums[b].2 += 1;
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .map(|(b, (sum_p, positives, count))| CalibrationBin {
            bin_low: b as f64 / n_bins as f64,
            bin_high: (b + 1) as f64 / n_bins as f64,
            mean_predicted: (count > 0).then(|| sum_p / count as f64),
            empirical_frequency: (count > 0).then(|| positives as f64 / count as f64),
            count,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 1, 2], &[1, 2, 0]).unwrap(), 0.0);
        let labels = [0, 1, 2, 0, 1, 2, 0, 1, 2, 0];
        let preds = [0, 1, 2, 0, 1, 2, 0, 2, 0, 1];
        assert_abs_diff_eq!(accuracy(&labels, &preds).unwrap(), 0.7);
        assert!(accuracy(&[], &[]).is_err());
        assert!(accuracy(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn kappa_diagonal_and_constant_predictions() {
        let cm = ConfusionMatrix::from_pairs(3, &[0, 1, 2, 2], &[0, 1, 2, 2]).unwrap();
        assert_eq!(quadratic_weighted_kappa(&cm).unwrap(), 1.0);
        let cm = ConfusionMatrix::from_pairs(3, &[0, 1, 2, 2, 1], &[1; 5]).unwrap();
        assert_eq!(quadratic_weighted_kappa(&cm).unwrap(), 0.0);
    }

    #[test]
    fn kappa_hand_example() {
        // O = [[2,1,0],[0,2,1],[0,0,4]], n = 10, w = (i-j)^2/4.
        // rows (.3,.3,.4), cols (.2,.3,.5).
        // observed = (1*.25 + 1*.25)/10 = .05
        // expected = .25*(.3*.3 + .3*.2 + .3*.5 + .4*.3) + 1*(.3*.5 + .4*.2) = .105 + .23 = .335
        let cm = ConfusionMatrix {
            k: 3,
            counts: vec![vec![2, 1, 0], vec![0, 2, 1], vec![0, 0, 4]],
        };
        assert_abs_diff_eq!(quadratic_weighted_kappa(&cm).unwrap(), 1.0 - 0.05 / 0.335, epsilon = 1e-12);
    }

    #[test]
    fn kappa_degenerate() {
        let cm = ConfusionMatrix::from_pairs(3, &[1, 1], &[1, 1]).unwrap();
        assert!(matches!(quadratic_weighted_kappa(&cm), Err(Error::KappaUndefined)));
        assert!(quadratic_weighted_kappa(&ConfusionMatrix::new(3)).is_err());
    }

    #[test]
    fn brier_examples() {
        let one_hot = vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert_eq!(brier_score(&[0, 2], &one_hot).unwrap(), 0.0);
        assert_eq!(brier_score(&[0, 1, 1], &[vec![0.5], vec![0.5], vec![0.5]]).unwrap(), 0.25);
        let b = brier_score(&[1, 0, 0], &[vec![0.9], vec![0.2], vec![0.6]]).unwrap();
        assert_abs_diff_eq!(b, (0.01 + 0.04 + 0.36) / 3.0, epsilon = 1e-15);
        assert!(brier_score(&[0], &[vec![1.2]]).is_err());
    }

    #[test]
    fn calibration_all_certain() {
        let bins = calibration_curve(&[true; 5], &[1.0; 5], 10).unwrap();
        assert_eq!(bins.len(), 10);
        assert_eq!(bins[9].count, 5);
        assert_eq!(bins[9].empirical_frequency, Some(1.0));
        assert!(bins[..9].iter().all(|b| b.count == 0 && b.mean_predicted.is_none()));
    }

    #[test]
    fn calibration_rejects_bad_input() {
        assert!(calibration_curve(&[], &[], 10).is_err());
        assert!(calibration_curve(&[true], &[0.5], 1).is_err());
        assert!(calibration_curve(&[true], &[1.5], 10).is_err());
    }
}
