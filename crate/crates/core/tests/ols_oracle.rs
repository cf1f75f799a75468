mod common;

use common::{correlation, normal_equations};
use proptest::prelude::*;
use simprobe_core::regress::{fit_columns, partial_coefficient, residualize};

fn names(p: usize) -> Vec<String> {
    (0..p).map(|i| format!("x{i}")).collect()
}

/// Intercept plus `p - 1` columns of bounded values, and a response.
fn problem() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (2usize..=6, 20usize..=120).prop_flat_map(|(p, n)| {
        (
            proptest::collection::vec(proptest::collection::vec(-5.0..5.0f64, n), p - 1),
            proptest::collection::vec(-10.0..10.0f64, n),
        )
            .prop_map(move |(cols, y)| {
                let mut all = vec![vec![1.0; n]];
                all.extend(cols);
                (all, y)
            })
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn qr_matches_normal_equations((cols, y) in problem()) {
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let fit = fit_columns(&names(cols.len()), &refs, &y).unwrap();
        let oracle = normal_equations(&cols, &y);
        for (c, b) in fit.coefficients.iter().zip(&oracle) {
            prop_assert!(close(c.estimate, *b, 1e-8), "{} vs {}", c.estimate, b);
        }
        prop_assert!((0.0..=1.0).contains(&fit.r_squared));
        // Residuals are orthogonal to every column.
        for c in &cols {
            let d: f64 = c.iter().zip(&fit.residuals).map(|(x, r)| x * r).sum();
            prop_assert!(d.abs() < 1e-8 * y.len() as f64);
        }
    }

    #[test]
    fn scaling_the_response_scales_estimates((cols, y) in problem(), k in 0.1..10.0f64) {
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let a = fit_columns(&names(cols.len()), &refs, &y).unwrap();
        let ky: Vec<f64> = y.iter().map(|v| v * k).collect();
        let b = fit_columns(&names(cols.len()), &refs, &ky).unwrap();
        for (x, z) in a.coefficients.iter().zip(&b.coefficients) {
            prop_assert!(close(x.estimate * k, z.estimate, 1e-9));
            // t statistics are scale free.
            prop_assert!(close(x.t, z.t, 1e-7));
        }
        prop_assert!(close(a.r_squared, b.r_squared, 1e-10));
    }

    #[test]
    fn frisch_waugh((cols, y) in problem()) {
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let fit = fit_columns(&names(cols.len()), &refs, &y).unwrap();
        let last = refs.len() - 1;
        let others: Vec<&[f64]> = refs[1..last].to_vec();
        let b = partial_coefficient(&y, refs[last], &others).unwrap();
        prop_assert!(close(fit.coefficients[last].estimate, b, 1e-8));
    }

    #[test]
    fn residuals_are_uncorrelated_with_covariates((cols, _y) in problem()) {
        prop_assume!(cols.len() >= 3);
        let covs: Vec<&[f64]> = cols[1..cols.len() - 1].iter().map(Vec::as_slice).collect();
        let r = residualize(&cols[cols.len() - 1], &covs).unwrap();
        for c in covs {
            prop_assert!(correlation(&r, c).abs() < 1e-10);
        }
    }
}
