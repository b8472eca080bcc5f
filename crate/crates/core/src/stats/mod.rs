//! Correlation, dependent-correlation tests, and significance clusters.

mod special;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use special::{ln_gamma, normal_two_tailed, reg_inc_beta, student_t_two_tailed};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub x_label: String,
    pub y_label: String,
    pub r: f64,
    pub n: usize,
    /// Two-tailed p-value of H0: ρ = 0.
    pub p: f64,
}

/// Sample Pearson correlation of two series.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Invalid(format!(
            "series lengths differ ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("first series"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("second series"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Two-tailed p-value for a sample correlation `r` over `n` points.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    let df = n as f64 - 2.0;
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let t = r * (df / (1.0 - r * r)).sqrt();
    student_t_two_tailed(t, df)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    pearson_labeled(x, y, "x", "y")
}

pub fn pearson_labeled(x: &[f64], y: &[f64], x_label: &str, y_label: &str) -> Result<CorrelationResult> {
    if x.len() < 3 {
        return Err(Error::Invalid(format!(
            "correlation needs at least 3 points, got {}",
            x.len()
        )));
    }
    let r = pearson_r(x, y)?;
    Ok(CorrelationResult {
        x_label: x_label.to_string(),
        y_label: y_label.to_string(),
        r,
        n: x.len(),
        p: correlation_p_value(r, x.len()),
    })
}

/// Test statistic used to compare two dependent correlations sharing one
/// variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DependentTest {
    /// Williams' t with n − 3 degrees of freedom.
    #[default]
    #[serde(rename = "williams-t")]
    WilliamsT,
    /// Steiger's Z on Fisher-transformed correlations.
    #[serde(rename = "steiger-z")]
    SteigerZ,
}

impl fmt::Display for DependentTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DependentTest::WilliamsT => "williams-t",
            DependentTest::SteigerZ => "steiger-z",
        })
    }
}

impl FromStr for DependentTest {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "williams-t" | "williams" => Ok(DependentTest::WilliamsT),
            "steiger-z" | "steiger" => Ok(DependentTest::SteigerZ),
            _ => Err(Error::Invalid(format!("unknown dependent-correlation test `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DependentTestResult {
    pub statistic: f64,
    pub p: f64,
}

const DET_EPS: f64 = 1e-12;

/// Compares `r_jk` with `r_jh`, where `j` is shared and `r_kh` is the
/// correlation between the two compared variables. Two-tailed.
///
/// A (numerically) singular correlation matrix yields `statistic = 0`,
/// `p = 1`.
pub fn steiger_dependent(r_jk: f64, r_jh: f64, r_kh: f64, n: usize) -> Result<DependentTestResult> {
    dependent_correlation_test(r_jk, r_jh, r_kh, n, DependentTest::WilliamsT)
}

pub fn dependent_correlation_test(
    r_jk: f64,
    r_jh: f64,
    r_kh: f64,
    n: usize,
    test: DependentTest,
) -> Result<DependentTestResult> {
    if n < 4 {
        return Err(Error::Invalid(format!("dependent correlation test needs n ≥ 4, got {n}")));
    }
    for r in [r_jk, r_jh, r_kh] {
        if !(-1.0..=1.0).contains(&r) {
            return Err(Error::Invalid(format!("correlation {r} outside [-1, 1]")));
        }
    }
    let det = 1.0 - r_jk * r_jk - r_jh * r_jh - r_kh * r_kh + 2.0 * r_jk * r_jh * r_kh;
    if det <= DET_EPS {
        log::debug!(
            "singular correlation matrix (r_jk={r_jk}, r_jh={r_jh}, r_kh={r_kh}); reporting p = 1"
        );
        return Ok(DependentTestResult {
            statistic: 0.0,
            p: 1.0,
        });
    }
    let nf = n as f64;
    let mean = (r_jk + r_jh) / 2.0;
    match test {
        DependentTest::WilliamsT => {
            let cube = (1.0 - r_kh).powi(3);
            let t = (r_jk - r_jh)
                * ((nf - 1.0) * (1.0 + r_kh)
                    / (2.0 * (nf - 1.0) / (nf - 3.0) * det + mean * mean * cube))
                    .sqrt();
            Ok(DependentTestResult {
                statistic: t,
                p: student_t_two_tailed(t, nf - 3.0),
            })
        }
        DependentTest::SteigerZ => {
            let m2 = mean * mean;
            let psi = r_kh * (1.0 - 2.0 * m2) - 0.5 * m2 * (1.0 - 2.0 * m2 - r_kh * r_kh);
            let c = psi / ((1.0 - m2) * (1.0 - m2));
            let z = (r_jk.atanh() - r_jh.atanh()) * (nf - 3.0).sqrt() / (2.0 - 2.0 * c).sqrt();
            Ok(DependentTestResult {
                statistic: z,
                p: normal_two_tailed(z),
            })
        }
    }
}

/// Positions `k` (1-based, `1 ≤ k < len`) after which a cluster boundary
/// lies: every variant at or above `k` differs from every variant below it
/// with `p < threshold`.
pub fn significance_clusters(p: &[Vec<f64>], threshold: f64) -> Vec<usize> {
    let v = p.len();
    (1..v)
        .filter(|&k| (0..k).all(|a| (k..v).all(|b| p[a][b] < threshold)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_linear() {
        let x = [1.0, 2.0, 4.0, 7.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let res = pearson(&x, &y).unwrap();
        assert!((res.r - 1.0).abs() < 1e-15);
        assert_eq!(res.p, 0.0);
    }

    #[test]
    fn orthogonal() {
        let x = [1.0, -1.0, 1.0, -1.0];
        let y = [1.0, 1.0, -1.0, -1.0];
        let res = pearson(&x, &y).unwrap();
        assert_eq!(res.r, 0.0);
        assert!((res.p - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_variance() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::ZeroVariance(_))
        ));
        assert!(pearson(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn steiger_equal_correlations() {
        let r = steiger_dependent(0.6, 0.6, 0.5, 100).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p - 1.0).abs() < 1e-15);
    }

    #[test]
    fn steiger_degenerate() {
        let r = steiger_dependent(0.8, 0.7, 1.0, 50).unwrap();
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn steiger_known_value() {
        // Direct evaluation of the Williams formula.
        let (a, b, c, n) = (0.5f64, 0.3f64, 0.4f64, 103usize);
        let det = 1.0 - a * a - b * b - c * c + 2.0 * a * b * c;
        let nf = n as f64;
        let m = (a + b) / 2.0;
        let t = (a - b) * ((nf - 1.0) * (1.0 + c) / (2.0 * (nf - 1.0) / (nf - 3.0) * det + m * m * (1.0 - c).powi(3))).sqrt();
        let r = steiger_dependent(a, b, c, n).unwrap();
        assert!((r.statistic - t).abs() < 1e-12);
        // scipy: t = 2.0966664836243627, p = 2 * t.sf(t, 100)
        assert!((r.statistic - 2.096_666_483_624_362_7).abs() < 1e-12);
        assert!((r.p - 0.038_546_384_198_773_21).abs() < 1e-9, "{}", r.p);
    }

    #[test]
    fn steiger_z_variant() {
        let z = dependent_correlation_test(0.5, 0.3, 0.4, 103, DependentTest::SteigerZ).unwrap();
        let t = dependent_correlation_test(0.5, 0.3, 0.4, 103, DependentTest::WilliamsT).unwrap();
        assert!(z.statistic > 0.0);
        assert!((z.p - t.p).abs() < 0.01, "{} vs {}", z.p, t.p);
        // Meng-Rosenthal-Rubin z on the same inputs (scipy): 2.066097791904537
        assert!((z.statistic - 2.066_097_791_904_537).abs() < 1e-9);
    }

    #[test]
    fn clusters_extremes() {
        let zeros = vec![vec![0.0; 4]; 4];
        assert_eq!(significance_clusters(&zeros, 0.05), vec![1, 2, 3]);
        let ones = vec![vec![1.0; 4]; 4];
        assert!(significance_clusters(&ones, 0.05).is_empty());
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn clusters_two_groups() {
        // (1,2) vs (3,4) significant, within-group not
        let mut p = vec![vec![0.5; 4]; 4];
        for a in 0..2 {
            for b in 2..4 {
                p[a][b] = 0.01;
                p[b][a] = 0.01;
            }
        }
        assert_eq!(significance_clusters(&p, 0.05), vec![2]);
    }

    proptest! {
        #[test]
        fn pearson_symmetric_and_affine(
            pts in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40),
            scale in 0.1f64..10.0, shift in -50.0f64..50.0,
        ) {
            let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let Ok(r) = pearson_r(&x, &y) else { return Ok(()); };
            prop_assert!((pearson_r(&y, &x).unwrap() - r).abs() < 1e-12);
            let xs: Vec<f64> = x.iter().map(|v| v * scale + shift).collect();
            prop_assert!((pearson_r(&xs, &y).unwrap() - r).abs() < 1e-9);
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            prop_assert!((pearson_r(&x, &neg).unwrap() + r).abs() < 1e-12);
        }

        #[test]
        fn steiger_antisymmetric(
            a in -0.95f64..0.95, b in -0.95f64..0.95, c in -0.95f64..0.95, n in 4usize..500,
        ) {
            let ab = steiger_dependent(a, b, c, n).unwrap();
            let ba = steiger_dependent(b, a, c, n).unwrap();
            prop_assert!((ab.statistic + ba.statistic).abs() < 1e-12);
            prop_assert!((ab.p - ba.p).abs() < 1e-12);
        }
    }
}
