//! Shapiro-Wilk W test with Royston's AS R94 approximations for the
//! coefficients and for the null distribution of W (3 <= n <= 5000).

use statrs::distribution::{ContinuousCDF, Normal};

use super::{TestMethod, TestResult};
use crate::error::{Error, Result};

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.5440, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

/// `c[0] + c[1] x + c[2] x^2 + ...`
fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Antisymmetric weight vector for the ordered sample, unit sum of squares.
pub(crate) fn coefficients(n: usize) -> Vec<f64> {
    let half = n / 2;
    let mut upper = vec![0.0; half];
    if n == 3 {
        upper[0] = std::f64::consts::FRAC_1_SQRT_2;
    } else {
        let std_normal = Normal::standard();
        let an25 = n as f64 + 0.25;
        // Blom-type approximations of the expected normal order statistics,
        // lower half (negative values).
        let m: Vec<f64> = (1..=half)
            .map(|i| std_normal.inverse_cdf((i as f64 - 0.375) / an25))
            .collect();
        let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / (n as f64).sqrt();
        let a1 = poly(&C1, rsn) - m[0] / ssumm2;
        let (first_plain, fac) = if n > 5 {
            let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
            upper[1] = a2;
            let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
            (2, fac)
        } else {
            let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
            (1, fac)
        };
        upper[0] = a1;
        for i in first_plain..half {
            upper[i] = -m[i] / fac;
        }
    }
    let mut full = vec![0.0; n];
    for (i, &a) in upper.iter().enumerate() {
        full[i] = -a;
        full[n - 1 - i] = a;
    }
    full
}

/// Shapiro-Wilk test of normality.
///
/// `W` is the squared correlation between the ordered sample and the
/// coefficient vector. The p-value is exact for `n = 3`; otherwise `ln(1 - W)`
/// (or a further log transform for `n <= 11`) is referred to a normal
/// distribution with polynomial mean and standard deviation.
pub fn shapiro_wilk(sample: &[f64]) -> Result<TestResult> {
    let n = sample.len();
    if !(3..=5000).contains(&n) {
        return Err(Error::InvalidInput(format!("shapiro-wilk needs 3 <= n <= 5000, got {n}")));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("shapiro-wilk sample must be finite".into()));
    }
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range <= 0.0 {
        return Err(Error::InvalidInput("shapiro-wilk: zero range".into()));
    }
    x.iter_mut().for_each(|v| *v /= range);

    let a = coefficients(n);
    let nf = n as f64;
    let x_mean = x.iter().sum::<f64>() / nf;
    let a_mean = a.iter().sum::<f64>() / nf;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (ai, xi) in a.iter().zip(&x) {
        let da = ai - a_mean;
        let dx = xi - x_mean;
        ssa += da * da;
        ssx += dx * dx;
        sax += da * dx;
    }
    let ssassx = (ssa * ssx).sqrt();
    let w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    let w = 1.0 - w1;

    let p_value = if n == 3 {
        let pi6 = 6.0 / std::f64::consts::PI;
        let stqr = std::f64::consts::FRAC_PI_3;
        (pi6 * (w.sqrt().asin() - stqr)).max(0.0)
    } else {
        let mut y = w1.ln();
        let (m, s) = if n <= 11 {
            let gamma = poly(&G, nf);
            if y >= gamma {
                return Ok(TestResult {
                    statistic: w,
                    p_value: 1e-99,
                    method: TestMethod::ShapiroWilk,
                });
            }
            y = -(gamma - y).ln();
            (poly(&C3, nf), poly(&C4, nf).exp())
        } else {
            let ln_n = nf.ln();
            (poly(&C5, ln_n), poly(&C6, ln_n).exp())
        };
        Normal::new(m, s)
            .map_err(|e| Error::InvalidInput(e.to_string()))?
            .sf(y)
    };
    Ok(TestResult {
        statistic: w,
        p_value: p_value.clamp(0.0, 1.0),
        method: TestMethod::ShapiroWilk,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_have_unit_norm() {
        for n in [3, 4, 5, 6, 7, 11, 12, 50, 501, 5000] {
            let a = coefficients(n);
            let ss: f64 = a.iter().map(|v| v * v).sum();
            assert!((ss - 1.0).abs() < 1e-9, "n = {n}: {ss}");
        }
    }

    #[test]
    fn size_limits() {
        assert!(shapiro_wilk(&[1.0, 2.0]).is_err());
        assert!(shapiro_wilk(&vec![0.5; 5001]).is_err());
        assert!(shapiro_wilk(&[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn coefficient_shaped_sample_has_unit_w() {
        let a = coefficients(40);
        let r = shapiro_wilk(&a.iter().map(|v| 3.0 * v + 1.0).collect::<Vec<_>>()).unwrap();
        assert!((r.statistic - 1.0).abs() < 1e-9);
    }
}
