//! Coefficient stability between two fits of the same model, typically an
//! experiment and its replication with a different lexicon.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::paircode::INTERCEPT;
use crate::regress::report::FitTable;
use crate::regress::RegressionFit;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRow {
    pub term: String,
    pub a: f64,
    pub b: f64,
    /// `a - b`.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationReport {
    pub model: String,
    pub rows: Vec<ReplicationRow>,
    pub r_squared: (f64, f64),
    /// Spearman correlation of the non-intercept coefficients. `None` when
    /// fewer than two remain or one side has all-equal coefficients.
    pub rank_correlation: Option<f64>,
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut out = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            out[i] = rank;
        }
        start = end;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    pearson(&ranks(x), &ranks(y))
}

/// Compares two fits with identical term lists.
pub fn replication_report(model: &str, a: &RegressionFit, b: &RegressionFit) -> Result<ReplicationReport> {
    let ta: Vec<&str> = a.terms().collect();
    let tb: Vec<&str> = b.terms().collect();
    if ta != tb {
        return Err(Error::SchemaMismatch(format!(
            "model `{model}`: terms {ta:?} vs {tb:?}"
        )));
    }
    let rows: Vec<ReplicationRow> = a
        .coefficients
        .iter()
        .zip(&b.coefficients)
        .map(|(x, y)| ReplicationRow {
            term: x.term.clone(),
            a: x.estimate,
            b: y.estimate,
            delta: x.estimate - y.estimate,
        })
        .collect();
    let (xa, xb): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.term != INTERCEPT)
        .map(|r| (r.a, r.b))
        .unzip();
    Ok(ReplicationReport {
        model: model.into(),
        rank_correlation: spearman(&xa, &xb),
        r_squared: (a.r_squared, b.r_squared),
        rows,
    })
}

/// One report per model; both tables must contain the same models.
pub fn compare_tables(a: &FitTable, b: &FitTable) -> Result<Vec<ReplicationReport>> {
    let names = |t: &FitTable| t.models.iter().map(|m| m.model.clone()).collect::<Vec<_>>();
    if names(a) != names(b) {
        return Err(Error::SchemaMismatch(format!(
            "models {:?} vs {:?}",
            names(a),
            names(b)
        )));
    }
    a.models
        .iter()
        .zip(&b.models)
        .map(|(x, y)| replication_report(&x.model, &x.fit, &y.fit))
        .collect()
}

impl ReplicationReport {
    /// Side-by-side table with deltas.
    pub fn render_text(&self, label_a: &str, label_b: &str) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.term.len())
            .chain(["R-squared".len()])
            .max()
            .unwrap_or(0);
        let col = label_a.len().max(label_b.len()).max(8);
        let mut out = String::new();
        let _ = writeln!(out, "model {}", self.model);
        let _ = writeln!(out, "{:<width$}  {label_a:>col$}  {label_b:>col$}  {:>8}", "term", "delta");
        for r in &self.rows {
            let _ = writeln!(out, "{:<width$}  {:>col$.2}  {:>col$.2}  {:>8.2}", r.term, r.a, r.b, r.delta);
        }
        let (ra, rb) = self.r_squared;
        let _ = writeln!(out, "{:<width$}  {ra:>col$.3}  {rb:>col$.3}  {:>8.3}", "R-squared", ra - rb);
        match self.rank_correlation {
            Some(rho) => {
                let _ = writeln!(out, "rank correlation of coefficients: {rho:.3}");
            }
            None => {
                let _ = writeln!(out, "rank correlation of coefficients: undefined");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::Coefficient;

    fn fit(terms: &[(&str, f64)]) -> RegressionFit {
        RegressionFit {
            coefficients: terms
                .iter()
                .map(|&(t, e)| Coefficient {
                    term: t.into(),
                    estimate: e,
                    std_error: 0.01,
                    t: e / 0.01,
                    p: 1e-10,
                })
                .collect(),
            r_squared: 0.5,
            n: 100,
            dof: 90,
            tss: 99.0,
            rss: 49.5,
            residuals: vec![],
        }
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn spearman_reference_values() {
        // Reversed order gives -1; a single swap among 5 gives 1 - 6*2/120 = 0.9.
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        let rho = spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 2.0, 3.0, 5.0, 4.0]).unwrap();
        assert!((rho - 0.9).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), None);
    }

    #[test]
    fn identical_fits() {
        let f = fit(&[("(Intercept)", -1.0), ("SameDet", 0.07), ("SameSubj", 2.26), ("SamePred", 0.74)]);
        let r = replication_report("main", &f, &f).unwrap();
        assert!(r.rows.iter().all(|row| row.delta == 0.0));
        assert_eq!(r.rank_correlation, Some(1.0));
    }

    #[test]
    fn published_replication_delta() {
        let a = fit(&[("SameSubj", 2.26), ("SamePred", 0.74)]);
        let b = fit(&[("SameSubj", 2.15), ("SamePred", 0.70)]);
        let r = replication_report("main", &a, &b).unwrap();
        assert!((r.rows[0].delta - 0.11).abs() < 1e-12);
        assert!(r.render_text("v1", "r2").contains("SameSubj"));
    }

    #[test]
    fn schema_mismatch() {
        let a = fit(&[("SameSubj", 1.0)]);
        let b = fit(&[("SameObj", 1.0)]);
        assert!(matches!(replication_report("m", &a, &b), Err(Error::SchemaMismatch(_))));
    }
}
