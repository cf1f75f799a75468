//! Ordinary least squares with classical inference.
//!
//! Fits are computed from a Householder QR decomposition of the design; the
//! normal matrix is never formed or inverted. Standard errors assume
//! homoskedastic errors and p-values are two-sided from Student's t with
//! `n - k` degrees of freedom (`k` columns including the intercept).

mod qr;
pub mod report;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, mean};
use crate::paircode::DesignMatrix;

use qr::HouseholderQr;

/// p-value threshold for the significance flag in reports.
pub const SIGNIFICANCE_LEVEL: f64 = 0.001;

/// Coefficients below this magnitude are left out when naming the columns a
/// dependent column is built from.
const DEPENDENCY_CUTOFF: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub term: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t: f64,
    pub p: f64,
}

impl Coefficient {
    pub fn is_significant(&self) -> bool {
        self.p < SIGNIFICANCE_LEVEL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub coefficients: Vec<Coefficient>,
    pub r_squared: f64,
    pub n: usize,
    pub dof: usize,
    /// Total (centered) sum of squares of the response.
    pub tss: f64,
    /// Residual sum of squares.
    pub rss: f64,
    /// Empty for fits read back from a report.
    pub residuals: Vec<f64>,
}

impl RegressionFit {
    pub fn coefficient(&self, term: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.term == term)
    }

    pub fn estimate(&self, term: &str) -> Option<f64> {
        self.coefficient(term).map(|c| c.estimate)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.coefficients.iter().map(|c| c.term.as_str())
    }
}

fn dependency_error(names: &[String], dep: qr::Dependent) -> Error {
    let depends_on = dep
        .combination
        .iter()
        .enumerate()
        .filter(|(_, c)| c.abs() > DEPENDENCY_CUTOFF)
        .map(|(i, _)| names[i].clone())
        .collect();
    Error::RankDeficient {
        column: names[dep.column].clone(),
        depends_on,
    }
}

fn decompose(names: &[String], columns: &[&[f64]]) -> Result<HouseholderQr> {
    if let Some(first) = columns.first() {
        let n = first.len();
        if let Some(bad) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: bad.len(),
            });
        }
        if n < columns.len() {
            return Err(Error::NoDegreesOfFreedom {
                rows: n,
                columns: columns.len(),
            });
        }
    }
    HouseholderQr::decompose(columns).map_err(|dep| dependency_error(names, dep))
}

/// Verifies full column rank, naming the first dependent column and the
/// columns it is a combination of.
pub fn check_rank(names: &[String], columns: &[Vec<f64>]) -> Result<()> {
    let cols: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
    decompose(names, &cols).map(|_| ())
}

fn two_sided_p(t: f64, dof: usize) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, dof as f64).expect("dof > 0");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

/// OLS fit of `y` on the given columns. The caller supplies the intercept
/// column; R² is computed against the centered total sum of squares.
pub fn fit_columns(names: &[String], columns: &[&[f64]], y: &[f64]) -> Result<RegressionFit> {
    if names.len() != columns.len() {
        return Err(Error::DimensionMismatch {
            expected: columns.len(),
            actual: names.len(),
        });
    }
    let n = y.len();
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: c.len(),
        });
    }
    let k = columns.len();
    if n <= k {
        return Err(Error::NoDegreesOfFreedom {
            rows: n,
            columns: k,
        });
    }
    let qr = decompose(names, columns)?;
    let beta = qr.solve(y);

    let mut residuals = y.to_vec();
    for (col, b) in columns.iter().zip(&beta) {
        for (r, x) in residuals.iter_mut().zip(col.iter()) {
            *r -= b * x;
        }
    }
    let rss = compensated_sum(residuals.iter().map(|r| r * r));
    let y_mean = mean(y);
    let tss = compensated_sum(y.iter().map(|v| (v - y_mean) * (v - y_mean)));
    let r_squared = if tss > 0.0 {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    } else {
        0.0
    };

    let dof = n - k;
    let sigma_sq = rss / dof as f64;
    let coefficients = names
        .iter()
        .zip(&beta)
        .zip(qr.unscaled_variances())
        .map(|((name, &estimate), v)| {
            let std_error = (sigma_sq * v).sqrt();
            let t = if std_error > 0.0 {
                estimate / std_error
            } else if estimate == 0.0 {
                0.0
            } else {
                f64::INFINITY.copysign(estimate)
            };
            Coefficient {
                term: name.clone(),
                estimate,
                std_error,
                t,
                p: two_sided_p(t, dof),
            }
        })
        .collect();

    Ok(RegressionFit {
        coefficients,
        r_squared,
        n,
        dof,
        tss,
        rss,
        residuals,
    })
}

/// Fits the design's response (or `y` when given) on all design columns.
pub fn fit_ols(design: &DesignMatrix, y: Option<&[f64]>) -> Result<RegressionFit> {
    let y = match (y, &design.response) {
        (Some(y), _) => y,
        (None, Some(r)) => r.as_slice(),
        (None, None) => {
            return Err(Error::schema("design matrix has no response column"));
        }
    };
    let cols: Vec<&[f64]> = design.columns.iter().map(Vec::as_slice).collect();
    fit_columns(&design.column_names, &cols, y)
}

/// `target` minus its least-squares projection on an intercept plus the
/// covariates. The result is orthogonal to the intercept and every covariate.
pub fn residualize(target: &[f64], covariates: &[&[f64]]) -> Result<Vec<f64>> {
    let ones = vec![1.0; target.len()];
    let mut columns: Vec<&[f64]> = vec![&ones];
    columns.extend_from_slice(covariates);
    let names: Vec<String> = std::iter::once("(Intercept)".to_string())
        .chain((0..covariates.len()).map(|i| format!("covariate {i}")))
        .collect();
    if target.len() < columns.len() {
        return Err(Error::NoDegreesOfFreedom {
            rows: target.len(),
            columns: columns.len(),
        });
    }
    let qr = decompose(&names, &columns)?;
    let beta = qr.solve(target);
    let mut out = target.to_vec();
    for (col, b) in columns.iter().zip(&beta) {
        for (r, x) in out.iter_mut().zip(col.iter()) {
            *r -= b * x;
        }
    }
    Ok(out)
}

/// Partial-regression coefficient of `x` in a regression of `y` on `x`, an
/// intercept, and `others`, computed by residualizing both `x` and `y` on
/// the intercept and `others`.
pub fn partial_coefficient(y: &[f64], x: &[f64], others: &[&[f64]]) -> Result<f64> {
    let ry = residualize(y, others)?;
    let rx = residualize(x, others)?;
    let num = compensated_sum(rx.iter().zip(&ry).map(|(a, b)| a * b));
    let den = compensated_sum(rx.iter().map(|a| a * a));
    if den == 0.0 {
        return Err(Error::RankDeficient {
            column: "target".into(),
            depends_on: vec!["others".into()],
        });
    }
    Ok(num / den)
}

/// R² gain of `fit_with` over `fit_without`, which must use a subset of its
/// terms on the same response.
pub fn compare_r2(fit_with: &RegressionFit, fit_without: &RegressionFit) -> Result<f64> {
    if fit_with.n != fit_without.n {
        return Err(Error::NotNested(format!(
            "fits have {} and {} observations",
            fit_with.n, fit_without.n
        )));
    }
    let scale = fit_with.tss.abs().max(fit_without.tss.abs()).max(f64::MIN_POSITIVE);
    if (fit_with.tss - fit_without.tss).abs() > 1e-9 * scale {
        return Err(Error::NotNested("fits use different responses".into()));
    }
    if let Some(extra) = fit_without
        .terms()
        .find(|t| fit_with.coefficient(t).is_none())
    {
        return Err(Error::NotNested(format!(
            "term `{extra}` of the smaller model is missing from the larger one"
        )));
    }
    let delta = fit_with.r_squared - fit_without.r_squared;
    if delta < -1e-10 {
        return Err(Error::NotNested(format!(
            "larger model has lower R² ({delta:e})"
        )));
    }
    Ok(delta.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        std::iter::once("(Intercept)".to_string())
            .chain((1..n).map(|i| format!("x{i}")))
            .collect()
    }

    #[test]
    fn exact_linear_fit() {
        let ones = vec![1.0; 6];
        let x1 = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let x2 = [1.0, 0.0, 1.0, 0.0, 1.0, 1.0];
        let y: Vec<f64> = (0..6).map(|i| 0.5 + 2.0 * x1[i] - 1.5 * x2[i]).collect();
        let fit = fit_columns(&names(3), &[&ones, &x1, &x2], &y).unwrap();
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-10));
        assert!((fit.coefficients[1].estimate - 2.0).abs() < 1e-12);
        assert!((fit.coefficients[2].estimate + 1.5).abs() < 1e-12);
        assert_eq!(fit.dof, 3);
    }

    #[test]
    fn response_orthogonal_to_slopes() {
        let ones = vec![1.0; 4];
        let x = [1.0, -1.0, 1.0, -1.0];
        let y = [1.0, 1.0, -1.0, -1.0];
        let fit = fit_columns(&names(2), &[&ones, &x], &y).unwrap();
        assert!(fit.coefficients[1].estimate.abs() < 1e-10);
        assert!(fit.r_squared.abs() < 1e-12);
    }

    #[test]
    fn no_degrees_of_freedom() {
        let ones = vec![1.0; 2];
        let x = [0.0, 1.0];
        assert!(matches!(
            fit_columns(&names(2), &[&ones, &x], &[1.0, 2.0]),
            Err(Error::NoDegreesOfFreedom { .. })
        ));
    }

    #[test]
    fn simple_regression_inference() {
        // y = 1 + 2x + e with e = (0.1, -0.2, 0.1, 0, 0); e is orthogonal to
        // (1, x), so slope = 2 exactly, RSS = 0.06, se(slope) = sqrt(0.06/3/10).
        let ones = vec![1.0; 5];
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [1.1, 2.8, 5.1, 7.0, 9.0];
        let fit = fit_columns(&names(2), &[&ones, &x], &y).unwrap();
        let slope = &fit.coefficients[1];
        assert!((slope.estimate - 2.0).abs() < 1e-12);
        assert!((fit.coefficients[0].estimate - 1.0).abs() < 1e-12);
        assert!((fit.rss - 0.06).abs() < 1e-12);
        assert!((slope.std_error - 0.002_f64.sqrt()).abs() < 1e-12);
        assert!(slope.p < 1e-4);
        assert!(slope.is_significant());
    }

    #[test]
    fn p_values_match_reference_quantiles() {
        // t_{0.975, 10} = 2.228139; normal 1.959964 for very large dof.
        assert!((two_sided_p(2.228_138_851_986_522, 10) - 0.05).abs() < 1e-9);
        assert!((two_sided_p(1.959_963_984_540_054, 1_000_000) - 0.05).abs() < 1e-5);
        assert_eq!(two_sided_p(0.0, 5), 1.0);
        assert_eq!(two_sided_p(f64::INFINITY, 5), 0.0);
    }

    #[test]
    fn residualize_removes_projection() {
        let target = [1.0, 2.0, 4.0, 8.0, 16.0];
        let cov = [0.0, 1.0, 0.0, 1.0, 1.0];
        let r = residualize(&target, &[&cov]).unwrap();
        let dot: f64 = r.iter().zip(&cov).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-12);
        assert!(r.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn residualize_exact_combination_vanishes() {
        let a = [1.0, 0.0, 2.0, 5.0, 3.0];
        let b = [0.0, 1.0, 1.0, 0.0, 2.0];
        let target: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 3.0 + x - 2.0 * y).collect();
        let r = residualize(&target, &[&a, &b]).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn residualize_keeps_orthogonal_centered_target() {
        let cov = [1.0, 1.0, -1.0, -1.0];
        let target = [1.0, -1.0, 1.0, -1.0];
        let r = residualize(&target, &[&cov]).unwrap();
        for (a, b) in r.iter().zip(&target) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn compare_r2_rules() {
        let ones = vec![1.0; 6];
        let x1 = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        let x2 = [0.0, 0.0, 1.0, 1.0, 2.0, 2.0];
        let y = [0.1, 1.2, 0.8, 2.1, 2.2, 2.9];
        let n3 = names(3);
        let full = fit_columns(&n3, &[&ones, &x1, &x2], &y).unwrap();
        let reduced = fit_columns(&n3[..2], &[&ones, &x1], &y).unwrap();
        assert_eq!(compare_r2(&full, &full).unwrap(), 0.0);
        assert!(compare_r2(&full, &reduced).unwrap() > 0.0);
        assert!(matches!(compare_r2(&reduced, &full), Err(Error::NotNested(_))));

        let other: Vec<f64> = y.iter().map(|v| v * 2.0).collect();
        let scaled = fit_columns(&n3[..2], &[&ones, &x1], &other).unwrap();
        assert!(matches!(compare_r2(&full, &scaled), Err(Error::NotNested(_))));
    }

    #[test]
    fn duplicate_column_names_dependency() {
        let ones = vec![1.0; 5];
        let x = [0.0, 1.0, 0.0, 1.0, 1.0];
        let y = [1.0, 2.0, 3.0, 4.0, 5.0];
        let n = vec!["(Intercept)".to_string(), "x".into(), "x copy".into()];
        match fit_columns(&n, &[&ones, &x, &x], &y) {
            Err(Error::RankDeficient { column, depends_on }) => {
                assert_eq!(column, "x copy");
                assert_eq!(depends_on, vec!["x".to_string()]);
            }
            other => panic!("{other:?}"),
        }
    }
}
