//! Exact solver, closed form and multilinear fit checked against each other
//! at random parameters.

use nesslab::closedform::{correlation, prescribed, theorem_coefficients};
use nesslab::verify::{closed_form_matrix, compare_exact, fit_multilinear};
use nesslab::{correlations, solve_two_point, ModelParams};
use proptest::prelude::*;

fn theorem_point() -> impl Strategy<Value = (ModelParams, f64)> {
    (4usize..16, 0.0..0.95f64, 0.01..=0.25f64, 0.0..5.0f64, 0.0..5.0f64).prop_map(|(n, lambda, alpha, tl, tr)| {
        let p = prescribed(&ModelParams::new(n, lambda, tl, tr, 0.0, 0.0), alpha).unwrap();
        (p, alpha)
    })
}

fn residual(p: &ModelParams, alpha: f64) -> f64 {
    let m = solve_two_point(p, alpha).unwrap();
    fit_multilinear(&m).unwrap().max_residual() / m.scale()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solver_equals_ansatz((p, alpha) in theorem_point()) {
        let solved = solve_two_point(&p, alpha).unwrap();
        let ansatz = closed_form_matrix(&p, alpha).unwrap();
        let cmp = compare_exact(&solved, &ansatz, 1e-9).unwrap();
        prop_assert!(cmp.passed, "{:?}", cmp.worst);
    }

    #[test]
    fn fit_recovers_theorem_coefficients((p, alpha) in theorem_point()) {
        let fit = fit_multilinear(&solve_two_point(&p, alpha).unwrap()).unwrap();
        let c = theorem_coefficients(&p, alpha).unwrap();
        let scale = 1.0 + p.l2.max(p.r2);
        for (got, want) in fit.offdiag.iter().zip([c.a, c.b, c.c, c.d]) {
            prop_assert!((got - want).abs() <= 1e-8 * scale, "{:?} vs {:?}", fit.offdiag, c);
        }
        for (got, want) in fit.diag.iter().zip([c.e, c.f, c.g]) {
            prop_assert!((got - want).abs() <= 1e-8 * scale, "{:?} vs {:?}", fit.diag, c);
        }
    }

    #[test]
    fn correlations_are_nonnegative_off_diagonal((p, alpha) in theorem_point()) {
        let c = correlations(&solve_two_point(&p, alpha).unwrap());
        let n = p.n_sites;
        for i in 1..=n {
            for j in i + 1..=n {
                let closed = correlation(&p, alpha, i, j).unwrap();
                prop_assert!((c.get(i, j) - closed).abs() <= 1e-9 * (1.0 + p.l2.max(p.r2)));
                prop_assert!(closed >= -1e-15);
            }
        }
    }
}

/// Off the prescription the fit residual grows linearly in the offset.
#[test]
fn residual_is_linear_in_the_offset() {
    for (n, lambda, alpha, tl, tr) in [
        (6, 0.3, 1.0 / 6.0, 1.0, 2.0),
        (10, 0.0, 0.2, 0.5, 3.0),
        (5, 0.8, 0.05, 2.0, 2.0),
    ] {
        let p = prescribed(&ModelParams::new(n, lambda, tl, tr, 0.0, 0.0), alpha).unwrap();
        let r: Vec<f64> = [1e-3, 1e-2, 1e-1]
            .iter()
            .map(|d| residual(&p.with_second_moments(p.l2 + d, p.r2), alpha))
            .collect();
        // Residual over a fixed scale is linear in the offset; the scale
        // itself moves by at most the offset.
        let slope = r[0] / 1e-3;
        for (ri, d) in r.iter().zip([1e-3, 1e-2, 1e-1]) {
            let ratio = ri / (slope * d);
            assert!((ratio - 1.0).abs() < 0.1, "N={n}: {r:?}");
        }
    }
}
