//! Frozen numerical tolerances.
//!
//! Deterministic engines (profile, exact solver, closed form) agree to near
//! machine precision; the thresholds here are what the test suites and the
//! `verify` report compare against. Relative tolerances are taken against a
//! scale of `max(1, max |value|)`.

/// Row residual of the tridiagonal profile system, times `max(T_L, T_R, 1)`.
pub const PROFILE_RESIDUAL: f64 = 1e-12;

/// Profile solve vs the affine closed form.
pub const PROFILE_AGREEMENT: f64 = 1e-12;

/// Stationarity row residual of the two-point system, times
/// `max(1, L², R², T_L·T_R)`.
pub const SOLVER_RESIDUAL: f64 = 1e-10;

/// Exact solver vs the multilinear ansatz, entrywise relative.
pub const THEOREM_RELATIVE: f64 = 1e-9;

/// Correlations at the KMP point vs `(T_L−T_R)²/(N+2)·i/(N+1)·(1−j/(N+1))`.
pub const KMP_ABSOLUTE: f64 = 1e-10;

/// |C| below this times scale counts as zero.
pub const ZERO_CORRELATION: f64 = 1e-12;

/// Largest fit residual (times scale) still called multilinear.
///
/// Measured max over the theorem-conditioned grid is about 1e-14; this sits
/// more than 100x above it.
pub const MULTILINEAR: f64 = 1e-9;

/// Smallest fit residual (times scale) that counts as evidence of
/// non-multilinearity. More than 1e4x above the theorem-grid residual.
pub const NON_MULTILINEAR: f64 = 1e-6;

/// Width of the statistical acceptance band, in batch-means standard errors.
pub const SIGMA_BAND: f64 = 4.0;

/// Fractional agreement demanded between a law's declared moments and the
/// moments given in `ModelParams`.
pub const LAW_MOMENT_MATCH: f64 = 1e-9;

/// `max(1, max |v|)` over a set of values.
pub fn scale_of<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().fold(1.0_f64, |acc, v| acc.max(v.abs()))
}

/// True when `a` and `b` agree to `rel` relative to `max(1, |a|, |b|)`.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * 1.0_f64.max(a.abs()).max(b.abs())
}
