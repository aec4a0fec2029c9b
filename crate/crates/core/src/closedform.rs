//! Closed-form stationary two-point functions under the multilinear
//! second-moment prescription.
//!
//! Everything here is a direct evaluation. Two shared factors appear
//! throughout:
//!
//! * `D = 1 + Nλ + 2(N−1)(1−λ)α`
//! * `S = λ + 2α(1−λ)`
//!
//! and `B = 1 − 2α(1−λ)`. The temperature difference `T_R − T_L` is computed
//! once and used as a primitive so that nearly equal reservoir means do not
//! cancel term by term.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{validate_alpha, ModelParams};
use crate::profile::profile_closed_form;

/// Coefficients of `μ_ij = a + b·i + c·j + d·i·j` (i < j) and
/// `μ_ii = e + f·i + g·i²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormCoefficients {
    pub n_sites: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub g: f64,
    /// `D = 1 + Nλ + 2(N−1)(1−λ)α`.
    pub d_factor: f64,
    /// `S = λ + 2α(1−λ)`.
    pub s_factor: f64,
}

#[derive(Debug, Clone, Copy)]
struct Shared {
    n: f64,
    mu: f64,
    alpha: f64,
    d: f64,
    s: f64,
    b: f64,
    /// α(1−λ)B(T_L−T_R)²/((N+1)·D·S), the part of L² and R² that depends on
    /// the gradient.
    gradient_term: f64,
}

fn shared(p: &ModelParams, alpha: f64) -> Result<Shared> {
    let alpha = validate_alpha(alpha)?;
    let n = p.n_sites as f64;
    let lambda = p.lambda;
    let mu = 1.0 - lambda;
    let d = 1.0 + n * lambda + 2.0 * (n - 1.0) * mu * alpha;
    let s = lambda + 2.0 * alpha * mu;
    let b = 1.0 - 2.0 * alpha * mu;
    let dt = p.t_right - p.t_left;
    Ok(Shared {
        n,
        mu,
        alpha,
        d,
        s,
        b,
        gradient_term: alpha * mu * b * dt * dt / ((n + 1.0) * d * s),
    })
}

fn require_unit_rates(p: &ModelParams) -> Result<()> {
    if p.has_unit_rates() {
        Ok(())
    } else {
        Err(Error::UnitRatesRequired {
            gamma_left: p.gamma_left,
            gamma_right: p.gamma_right,
        })
    }
}

/// `(1−4α)(1−λ)/D`; the off-diagonal correlation is this times
/// `(T_L−T_R)²·i/(N+1)·(1−j/(N+1))`.
pub fn correlation_amplitude(n_sites: usize, lambda: f64, alpha: f64) -> f64 {
    let n = n_sites as f64;
    let mu = 1.0 - lambda;
    (1.0 - 4.0 * alpha) * mu / (1.0 + n * lambda + 2.0 * (n - 1.0) * mu * alpha)
}

/// The reservoir second moments `(L², R²)` for which the two-point function
/// is multilinear.
pub fn second_moment_prescription(p: &ModelParams, alpha: f64) -> Result<(f64, f64)> {
    let sh = shared(p, alpha)?;
    let ratio = sh.b / sh.s;
    Ok((
        ratio * p.t_left * p.t_left + sh.gradient_term,
        ratio * p.t_right * p.t_right + sh.gradient_term,
    ))
}

/// `p` with `l2`, `r2` replaced by the prescription.
pub fn prescribed(p: &ModelParams, alpha: f64) -> Result<ModelParams> {
    let (l2, r2) = second_moment_prescription(p, alpha)?;
    Ok(p.with_second_moments(l2, r2))
}

pub fn theorem_coefficients(p: &ModelParams, alpha: f64) -> Result<ClosedFormCoefficients> {
    require_unit_rates(p)?;
    let sh = shared(p, alpha)?;
    let Shared {
        n, mu, alpha, d, s, b, ..
    } = sh;
    let (tl, tr) = (p.t_left, p.t_right);
    let dt = tr - tl;
    let dt2 = dt * dt;
    let n1 = n + 1.0;
    let lambda = p.lambda;
    let w = 1.0 - 4.0 * alpha;

    let a = tl * tl;
    let b_lin = dt * (n1 * s * tl + mu * w * tr) / (n1 * d);
    let c = dt * tl / n1;
    let d_bil = s * dt2 / (n1 * d);
    let f = b * dt * ((1.0 + (2.0 * n + 1.0) * lambda + 4.0 * n * alpha * mu) * tl + w * mu * tr) / (n1 * d * s);
    let g = b * dt2 / (n1 * d);
    // Constant term of the diagonal correlation, plus E_N(0)² = T_L².
    let e = tl * tl + w * mu * tl * tl / s + sh.gradient_term;

    Ok(ClosedFormCoefficients {
        n_sites: p.n_sites,
        a,
        b: b_lin,
        c,
        d: d_bil,
        e,
        f,
        g,
        d_factor: d,
        s_factor: s,
    })
}

/// Evaluates the ansatz at `1 <= i <= j <= N`.
pub fn moment_from_ansatz(coeffs: &ClosedFormCoefficients, i: usize, j: usize) -> Result<f64> {
    let n = coeffs.n_sites;
    if i < 1 || i > j || j > n {
        return Err(Error::IndexOutOfRange { i, j, n });
    }
    let (x, y) = (i as f64, j as f64);
    Ok(if i < j {
        coeffs.a + coeffs.b * x + coeffs.c * y + coeffs.d * x * y
    } else {
        coeffs.e + coeffs.f * x + coeffs.g * x * x
    })
}

/// `C_N(i, j)` for `0 <= i <= j <= N+1` under the prescription.
///
/// The ghost diagonal entries are the prescribed reservoir variances; the
/// off-diagonal ghost rows and columns are zero.
pub fn correlation(p: &ModelParams, alpha: f64, i: usize, j: usize) -> Result<f64> {
    require_unit_rates(p)?;
    let n_sites = p.n_sites;
    if i > j || j > n_sites + 1 {
        return Err(Error::IndexOutOfRange { i, j, n: n_sites });
    }
    let sh = shared(p, alpha)?;
    let (tl, tr) = (p.t_left, p.t_right);
    let dt = tr - tl;
    let n1 = sh.n + 1.0;
    let w = 1.0 - 4.0 * sh.alpha;

    if i < j {
        if i == 0 || j == n_sites + 1 {
            return Ok(0.0);
        }
        let x = i as f64 / n1;
        let y = j as f64 / n1;
        return Ok(w * sh.mu * dt * dt / sh.d * x * (1.0 - y));
    }
    if i == 0 {
        let (l2, _) = second_moment_prescription(p, alpha)?;
        return Ok(l2 - tl * tl);
    }
    if i == n_sites + 1 {
        let (_, r2) = second_moment_prescription(p, alpha)?;
        return Ok(r2 - tr * tr);
    }
    let x = i as f64 / n1;
    let lambda = p.lambda;
    let n = sh.n;
    let constant = w * sh.mu * tl * tl / sh.s + sh.gradient_term;
    let linear =
        w * sh.mu * dt * ((1.0 + 2.0 * lambda * n + 2.0 * sh.alpha * (2.0 * n - 1.0) * sh.mu) * tl + sh.b * tr)
            / (sh.s * sh.d);
    let quadratic = w * sh.mu * dt * dt * n / sh.d;
    Ok(constant + linear * x + quadratic * x * x)
}

/// All `C_N(i, j)` as a dense `(N+2)×(N+2)` symmetric table.
#[allow(clippy::needless_range_loop)]
pub fn correlation_table(p: &ModelParams, alpha: f64) -> Result<Vec<Vec<f64>>> {
    let m = p.n_sites + 2;
    let mut out = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i..m {
            let v = correlation(p, alpha, i, j)?;
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    Ok(out)
}

/// `μ_ij` for `0 <= i <= j <= N+1` from the ansatz, with the ghost
/// conventions `μ_{0j} = T_L·E_N(j)`, `μ_{i,N+1} = T_R·E_N(i)`, `μ_00 = L²`,
/// `μ_{N+1,N+1} = R²`.
#[allow(clippy::needless_range_loop)]
pub fn moment_table(p: &ModelParams, alpha: f64) -> Result<Vec<Vec<f64>>> {
    let coeffs = theorem_coefficients(p, alpha)?;
    let profile = profile_closed_form(p)?;
    let (l2, r2) = second_moment_prescription(p, alpha)?;
    let n = p.n_sites;
    let m = n + 2;
    let mut out = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i..m {
            let v = if i == 0 && j == 0 {
                l2
            } else if i == n + 1 {
                r2
            } else if i == 0 {
                p.t_left * profile.at(j)
            } else if j == n + 1 {
                p.t_right * profile.at(i)
            } else {
                moment_from_ansatz(&coeffs, i, j)?
            };
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    Ok(out)
}
