use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{mean, variance, TestMethod, TestResult};
use crate::error::{Error, Result};

/// Two-sided Welch t-test with Welch-Satterthwaite degrees of freedom.
///
/// When both samples have zero variance, equal means give `p = 1` and
/// unequal means `p = 0`.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "welch t-test needs at least 2 values per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("welch t-test samples must be finite".into()));
    }
    let (ma, mb) = (mean(a), mean(b));
    let sa = variance(a) / a.len() as f64;
    let sb = variance(b) / b.len() as f64;
    let se2 = sa + sb;
    let result = |statistic, p_value| TestResult {
        statistic,
        p_value,
        method: TestMethod::WelchT,
    };
    if se2 == 0.0 {
        return Ok(if ma == mb {
            result(0.0, 1.0)
        } else {
            result(if ma > mb { f64::INFINITY } else { f64::NEG_INFINITY }, 0.0)
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (a.len() - 1) as f64 + sb * sb / (b.len() - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let p = (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0);
    Ok(result(t, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let a = [1.0, 2.0, 3.0, 4.5];
        let r = welch_t_test(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn zero_variance_conventions() {
        let r = welch_t_test(&[0.0; 4], &[1.0; 4]).unwrap();
        assert_eq!(r.p_value, 0.0);
        let r = welch_t_test(&[2.0; 3], &[2.0; 5]).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn symmetric_p_value() {
        let a = [0.1, 0.4, 0.35, 0.8, 0.05];
        let b = [0.5, 0.9, 0.7, 1.1, 0.65, 0.95];
        let ab = welch_t_test(&a, &b).unwrap();
        let ba = welch_t_test(&b, &a).unwrap();
        assert_eq!(ab.p_value, ba.p_value);
        assert_eq!(ab.statistic, -ba.statistic);
    }

    #[test]
    fn too_small() {
        assert!(welch_t_test(&[1.0], &[1.0, 2.0]).is_err());
    }
}
