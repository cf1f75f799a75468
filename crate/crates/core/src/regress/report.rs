//! Fit tables: a tab-separated form that round-trips coefficient values
//! exactly, and an aligned text rendering for reading.
//!
//! ```text
//! # key<TAB>value                       metadata lines
//! model  term  estimate  std_error  t  p  significant
//! main   SameSubj  1.93  0.01  ...
//!                                        blank line
//! model  r_squared  n  dof  tss  nested_in  delta_r_squared
//! main   0.91  32640  32634  32639  -  -
//! ```
//!
//! Estimates, standard errors, t statistics, R² and TSS are written with the
//! shortest representation that parses back to the same `f64`; p-values are
//! written to three significant digits.

use std::fmt::Write as _;

use super::{Coefficient, RegressionFit, SIGNIFICANCE_LEVEL};
use crate::error::{Error, Result};

const COEF_HEADER: &str = "model\tterm\testimate\tstd_error\tt\tp\tsignificant";
const STATS_HEADER: &str = "model\tr_squared\tn\tdof\ttss\tnested_in\tdelta_r_squared";

#[derive(Debug, Clone, PartialEq)]
pub struct ModelReport {
    pub model: String,
    pub fit: RegressionFit,
    /// Name of the larger model this one is nested in, if compared.
    pub nested_in: Option<String>,
    /// R² of the larger model minus R² of this one.
    pub delta_r_squared: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitTable {
    pub metadata: Vec<(String, String)>,
    pub models: Vec<ModelReport>,
}

impl FitTable {
    pub fn model(&self, name: &str) -> Option<&ModelReport> {
        self.models.iter().find(|m| m.model == name)
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}\t{v}");
        }
        let _ = writeln!(out, "{COEF_HEADER}");
        for m in &self.models {
            for c in &m.fit.coefficients {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{:.2e}\t{}",
                    m.model,
                    c.term,
                    c.estimate,
                    c.std_error,
                    c.t,
                    c.p,
                    if c.is_significant() { "***" } else { "" }
                );
            }
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{STATS_HEADER}");
        for m in &self.models {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                m.model,
                m.fit.r_squared,
                m.fit.n,
                m.fit.dof,
                m.fit.tss,
                m.nested_in.as_deref().unwrap_or("-"),
                m.delta_r_squared
                    .map_or_else(|| "-".to_string(), |d| d.to_string())
            );
        }
        out
    }

    pub fn parse_tsv(text: &str) -> Result<FitTable> {
        let mut table = FitTable::default();
        let mut lines = text.lines().enumerate().peekable();

        while let Some((_, line)) = lines.peek() {
            let Some(rest) = line.strip_prefix("# ") else {
                break;
            };
            let (k, v) = rest.split_once('\t').unwrap_or((rest, ""));
            table.metadata.push((k.to_string(), v.to_string()));
            lines.next();
        }

        let expect_header = |got: Option<(usize, &str)>, want: &str| -> Result<()> {
            match got {
                Some((_, h)) if h == want => Ok(()),
                Some((i, h)) => Err(Error::Parse(format!(
                    "fit table line {}: expected header {want:?}, found {h:?}",
                    i + 1
                ))),
                None => Err(Error::Parse(format!("fit table ends before {want:?}"))),
            }
        };
        expect_header(lines.next(), COEF_HEADER)?;

        let bad = |i: usize, what: &str| Error::Parse(format!("fit table line {}: {what}", i + 1));
        let num = |i: usize, s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| bad(i, &format!("invalid number {s:?}")))
        };

        let mut coefs: Vec<(String, Coefficient)> = Vec::new();
        for (i, line) in lines.by_ref() {
            if line.is_empty() {
                break;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 7 {
                return Err(bad(i, "expected 7 fields"));
            }
            coefs.push((
                f[0].to_string(),
                Coefficient {
                    term: f[1].to_string(),
                    estimate: num(i, f[2])?,
                    std_error: num(i, f[3])?,
                    t: num(i, f[4])?,
                    p: num(i, f[5])?,
                },
            ));
        }

        expect_header(lines.next(), STATS_HEADER)?;
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 7 {
                return Err(bad(i, "expected 7 fields"));
            }
            let model = f[0].to_string();
            let coefficients: Vec<Coefficient> = coefs
                .iter()
                .filter(|(m, _)| *m == model)
                .map(|(_, c)| c.clone())
                .collect();
            let fit = RegressionFit {
                coefficients,
                r_squared: num(i, f[1])?,
                n: f[2].parse().map_err(|_| bad(i, "invalid n"))?,
                dof: f[3].parse().map_err(|_| bad(i, "invalid dof"))?,
                tss: num(i, f[4])?,
                rss: f64::NAN,
                residuals: Vec::new(),
            };
            table.models.push(ModelReport {
                model,
                fit,
                nested_in: (f[5] != "-").then(|| f[5].to_string()),
                delta_r_squared: if f[6] == "-" { None } else { Some(num(i, f[6])?) },
            });
        }
        for (m, _) in &coefs {
            if table.model(m).is_none() {
                return Err(Error::Parse(format!("model `{m}` has no summary row")));
            }
        }
        Ok(table)
    }

    /// Aligned, human-readable rendering.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "{k}: {v}");
        }
        for m in &self.models {
            let _ = writeln!(out);
            let _ = writeln!(out, "model {}", m.model);
            out.push_str(&render_fit(&m.fit));
            if let (Some(parent), Some(d)) = (&m.nested_in, m.delta_r_squared) {
                let _ = writeln!(out, "R-squared gain of `{parent}` over this model: {d:.6}");
            }
        }
        out
    }
}

/// One fit as an aligned table with R², n and dof beneath it.
pub fn render_fit(fit: &RegressionFit) -> String {
    let width = fit
        .coefficients
        .iter()
        .map(|c| c.term.len())
        .max()
        .unwrap_or(0)
        .max("R-squared".len());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>10}  {:>10}  {:>10}  {:>9}",
        "term", "estimate", "std.err", "t", "p"
    );
    for c in &fit.coefficients {
        let _ = writeln!(
            out,
            "{:<width$}  {:>10.4}  {:>10.4}  {:>10.2}  {:>9.2e} {}",
            c.term,
            c.estimate,
            c.std_error,
            c.t,
            c.p,
            if c.is_significant() { "***" } else { "" }
        );
    }
    let _ = writeln!(out, "{:<width$}  {:>10.4}", "R-squared", fit.r_squared);
    let _ = writeln!(out, "n = {}, dof = {}", fit.n, fit.dof);
    let _ = writeln!(out, "*** p < {SIGNIFICANCE_LEVEL}");
    out
}
