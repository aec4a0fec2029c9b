//! Stationary one-point function `E_N(i)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Stationary means indexed `0..=N+1`; the two ends hold the reservoir means.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub values: Vec<f64>,
}

impl Profile {
    pub fn n_sites(&self) -> usize {
        self.values.len() - 2
    }

    /// `E_N(i)` for `i in 0..=N+1`.
    pub fn at(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Residual of each stationarity row `1..=N`, in the scaled form
    /// `γ_L(T_L − E_1) + (E_2 − E_1)`, `E_{i−1} − 2E_i + E_{i+1}`,
    /// `(E_{N−1} − E_N) + γ_R(T_R − E_N)`.
    pub fn residuals(&self, p: &ModelParams) -> Vec<f64> {
        let n = p.n_sites;
        let e = &self.values;
        (1..=n)
            .map(|i| {
                let left_rate = if i == 1 { p.gamma_left } else { 1.0 };
                let right_rate = if i == n { p.gamma_right } else { 1.0 };
                left_rate * (e[i - 1] - e[i]) + right_rate * (e[i + 1] - e[i])
            })
            .collect()
    }
}

/// `E_N(i) = T_L(1 − i/(N+1)) + T_R·i/(N+1)`; unit boundary rates only.
pub fn profile_closed_form(p: &ModelParams) -> Result<Profile> {
    if !p.has_unit_rates() {
        return Err(Error::UnitRatesRequired {
            gamma_left: p.gamma_left,
            gamma_right: p.gamma_right,
        });
    }
    let n1 = (p.n_sites + 1) as f64;
    let values = (0..=p.n_sites + 1)
        .map(|i| {
            let x = i as f64 / n1;
            p.t_left * (1.0 - x) + p.t_right * x
        })
        .collect();
    Ok(Profile { values })
}

/// Solves the tridiagonal stationarity system, boundary rows weighted by
/// the boundary rates. `p` must be validated.
pub fn profile_solve(p: &ModelParams) -> Profile {
    let n = p.n_sites;
    // Row i (0-based): lower[i]·E_{i} + diag[i]·E_{i+1} + upper[i]·E_{i+2} = rhs[i]
    // in 1-based site labels; rows are the generator divided by (1−λ)/2.
    let mut lower = vec![1.0; n];
    let mut diag = vec![-2.0; n];
    let mut upper = vec![1.0; n];
    let mut rhs = vec![0.0; n];
    lower[0] = 0.0;
    diag[0] = -(1.0 + p.gamma_left);
    rhs[0] = -p.gamma_left * p.t_left;
    upper[n - 1] = 0.0;
    diag[n - 1] = -(1.0 + p.gamma_right);
    rhs[n - 1] -= p.gamma_right * p.t_right;

    // Thomas elimination. Diagonal dominance holds for γ > 0, so no pivoting.
    for i in 1..n {
        let w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut interior = vec![0.0; n];
    interior[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        interior[i] = (rhs[i] - upper[i] * interior[i + 1]) / diag[i];
    }

    let mut values = Vec::with_capacity(n + 2);
    values.push(p.t_left);
    values.extend(interior);
    values.push(p.t_right);
    Profile { values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tolerances::{PROFILE_AGREEMENT, PROFILE_RESIDUAL};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params(n: usize, tl: f64, tr: f64) -> ModelParams {
        ModelParams::new(n, 0.3, tl, tr, tl * tl, tr * tr)
    }

    #[test]
    fn closed_form_examples() {
        let pr = profile_closed_form(&params(3, 0.0, 4.0)).unwrap();
        assert_eq!(pr.values, vec![0.0, 1.0, 2.0, 3.0, 4.0]);

        let pr = profile_closed_form(&params(7, 2.5, 2.5)).unwrap();
        assert!(pr.values.iter().all(|&v| v == 2.5));

        let pr = profile_closed_form(&params(4, 1.0, 2.0)).unwrap();
        for (got, want) in pr.values[1..5].iter().zip([1.2, 1.4, 1.6, 1.8]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn closed_form_rejects_gamma() {
        let p = params(4, 1.0, 2.0).with_gammas(2.0, 1.0);
        assert!(matches!(profile_closed_form(&p), Err(Error::UnitRatesRequired { .. })));
    }

    #[test]
    fn solve_matches_closed_form() {
        for n in [3, 4, 7, 20, 50] {
            let p = params(n, 0.7, 3.1);
            let solved = profile_solve(&p);
            let closed = profile_closed_form(&p).unwrap();
            for (a, b) in solved.values.iter().zip(&closed.values) {
                assert_abs_diff_eq!(a, b, epsilon = PROFILE_AGREEMENT * 3.1);
            }
        }
    }

    #[test]
    fn gamma_breaks_affinity_at_site_one() {
        // Explicit 3×3 oracle for γ_L = 2, γ_R = 1, T_L = 0, T_R = 1:
        //   2(0 − E1) + (E2 − E1) = 0  ⇒ E2 = 3 E1
        //   E1 − 2E2 + E3 = 0         ⇒ E3 = 5 E1
        //   (E2 − E3) + (1 − E3) = 0  ⇒ 1 − 7E1 = 0 ⇒ E1 = 1/7
        let p = params(3, 0.0, 1.0).with_gammas(2.0, 1.0);
        let pr = profile_solve(&p);
        let want = [0.0, 1.0 / 7.0, 3.0 / 7.0, 5.0 / 7.0, 1.0];
        for (a, b) in pr.values.iter().zip(want) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
        let second_difference = pr.values[0] - 2.0 * pr.values[1] + pr.values[2];
        assert!(second_difference.abs() > 1e-3);
    }

    #[test]
    fn equal_temperatures_give_constant_profile() {
        let p = params(6, 1.7, 1.7).with_gammas(0.3, 5.0);
        let pr = profile_solve(&p);
        for v in pr.values {
            assert_abs_diff_eq!(v, 1.7, epsilon = 1e-14);
        }
    }

    proptest! {
        #[test]
        fn rows_vanish_and_profile_is_bounded(
            n in 3usize..40,
            tl in 0.0..10.0_f64,
            tr in 0.0..10.0_f64,
            gl in 0.05..10.0_f64,
            gr in 0.05..10.0_f64,
        ) {
            let p = params(n, tl, tr).with_gammas(gl, gr);
            let pr = profile_solve(&p);
            let tol = PROFILE_RESIDUAL * tl.max(tr).max(1.0);
            for r in pr.residuals(&p) {
                prop_assert!(r.abs() < tol, "residual {}", r);
            }
            let (lo, hi) = (tl.min(tr), tl.max(tr));
            for &v in &pr.values {
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
            if tl < tr {
                for w in pr.values.windows(2) {
                    prop_assert!(w[1] >= w[0] - 1e-12);
                }
            }
        }

        #[test]
        fn profile_is_linear_in_boundary_data(
            n in 3usize..30,
            tl in 0.0..10.0_f64,
            tr in 0.0..10.0_f64,
            gl in 0.05..10.0_f64,
            gr in 0.05..10.0_f64,
        ) {
            let whole = profile_solve(&params(n, tl, tr).with_gammas(gl, gr));
            let left = profile_solve(&params(n, 1.0, 0.0).with_gammas(gl, gr));
            let right = profile_solve(&params(n, 0.0, 1.0).with_gammas(gl, gr));
            for i in 0..n + 2 {
                let combined = tl * left.values[i] + tr * right.values[i];
                prop_assert!((whole.values[i] - combined).abs() < 1e-12 * tl.max(tr).max(1.0));
            }
        }
    }
}
