//! Model parameters, the redistribution law ν, the reservoir laws, and the
//! derived generator coefficients.
//!
//! One exchange across a bond `(k, l)` keeps a fraction `lambda` of each
//! site's wealth and splits the remainder of the pooled wealth as
//! `ε : 1 − ε` with `ε ~ ν`. Boundary bonds exchange with a ghost value drawn
//! fresh from the reservoir law; only the chain site is updated.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};
use serde::Serialize;

use crate::error::{ParamError, Side};

/// Parameters of a chain of `n_sites` coupled to two reservoirs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub n_sites: usize,
    pub lambda: f64,
    pub t_left: f64,
    pub t_right: f64,
    pub l2: f64,
    pub r2: f64,
    pub gamma_left: f64,
    pub gamma_right: f64,
}

impl ModelParams {
    /// Unit boundary rates. Not validated; call [`ModelParams::validate`].
    pub fn new(n_sites: usize, lambda: f64, t_left: f64, t_right: f64, l2: f64, r2: f64) -> Self {
        Self {
            n_sites,
            lambda,
            t_left,
            t_right,
            l2,
            r2,
            gamma_left: 1.0,
            gamma_right: 1.0,
        }
    }

    pub fn with_gammas(mut self, gamma_left: f64, gamma_right: f64) -> Self {
        self.gamma_left = gamma_left;
        self.gamma_right = gamma_right;
        self
    }

    pub fn with_second_moments(mut self, l2: f64, r2: f64) -> Self {
        self.l2 = l2;
        self.r2 = r2;
        self
    }

    /// Checks every invariant and returns the first one violated.
    pub fn validate(self) -> Result<Self, ParamError> {
        let finite = [
            ("lambda", self.lambda),
            ("t_left", self.t_left),
            ("t_right", self.t_right),
            ("l2", self.l2),
            ("r2", self.r2),
            ("gamma_left", self.gamma_left),
            ("gamma_right", self.gamma_right),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(ParamError::NonFinite(name));
            }
        }
        if self.n_sites < 3 {
            return Err(ParamError::TooFewSites(self.n_sites));
        }
        if !(0.0..1.0).contains(&self.lambda) {
            return Err(ParamError::LambdaOutOfRange(self.lambda));
        }
        for (side, mean, m2) in [(Side::Left, self.t_left, self.l2), (Side::Right, self.t_right, self.r2)] {
            if mean < 0.0 {
                return Err(ParamError::NegativeMean { side, value: mean });
            }
            if m2 < mean * mean {
                return Err(ParamError::SecondMomentBelowSquaredMean {
                    side,
                    mean,
                    second_moment: m2,
                });
            }
        }
        for (side, value) in [(Side::Left, self.gamma_left), (Side::Right, self.gamma_right)] {
            if value <= 0.0 {
                return Err(ParamError::NonPositiveGamma { side, value });
            }
        }
        Ok(self)
    }

    pub fn has_unit_rates(&self) -> bool {
        self.gamma_left == 1.0 && self.gamma_right == 1.0
    }
}

/// Checks `0 < alpha <= 1/4`.
pub fn validate_alpha(alpha: f64) -> Result<f64, ParamError> {
    if alpha.is_finite() && alpha > 0.0 && alpha <= 0.25 {
        Ok(alpha)
    } else {
        Err(ParamError::AlphaOutOfRange(alpha))
    }
}

/// The named families for the law of ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RedistributionKind {
    Uniform,
    DeltaHalf,
    /// Beta(k, k).
    BetaSymmetric {
        k: f64,
    },
    /// Atoms at `p` and `1 − p`, each with probability 1/2.
    TwoAtomSymmetric {
        p: f64,
    },
}

/// `E[ε(1−ε)]` in closed form.
pub fn alpha_of_law(kind: RedistributionKind) -> f64 {
    match kind {
        RedistributionKind::Uniform => 1.0 / 6.0,
        RedistributionKind::DeltaHalf => 0.25,
        RedistributionKind::BetaSymmetric { k } => k / (2.0 * (2.0 * k + 1.0)),
        RedistributionKind::TwoAtomSymmetric { p } => p * (1.0 - p),
    }
}

/// A symmetric law on `[0, 1]` with mean 1/2, with `alpha` computed once.
#[derive(Debug, Clone, Copy)]
pub struct RedistributionLaw {
    kind: RedistributionKind,
    alpha: f64,
    beta: Option<Beta<f64>>,
}

impl RedistributionLaw {
    pub fn new(kind: RedistributionKind) -> Result<Self, ParamError> {
        let beta = match kind {
            RedistributionKind::BetaSymmetric { k } => {
                if !(k.is_finite() && k > 0.0) {
                    return Err(ParamError::Redistribution(format!(
                        "beta shape must be positive, got {k}"
                    )));
                }
                Some(Beta::new(k, k).map_err(|e| ParamError::Redistribution(e.to_string()))?)
            }
            RedistributionKind::TwoAtomSymmetric { p } => {
                if !(p > 0.0 && p <= 0.5) {
                    return Err(ParamError::Redistribution(format!(
                        "two-atom position must lie in (0, 1/2], got {p}"
                    )));
                }
                None
            }
            _ => None,
        };
        Ok(Self {
            kind,
            alpha: alpha_of_law(kind),
            beta,
        })
    }

    pub fn uniform() -> Self {
        Self::new(RedistributionKind::Uniform).expect("uniform law is valid")
    }

    pub fn kind(&self) -> RedistributionKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            RedistributionKind::Uniform => rng.random::<f64>(),
            RedistributionKind::DeltaHalf => 0.5,
            RedistributionKind::BetaSymmetric { .. } => {
                self.beta.expect("beta sampler built at construction").sample(rng)
            }
            RedistributionKind::TwoAtomSymmetric { p } => {
                if rng.random_bool(0.5) {
                    p
                } else {
                    1.0 - p
                }
            }
        }
    }
}

impl PartialEq for RedistributionLaw {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl fmt::Display for RedistributionLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            RedistributionKind::Uniform => f.write_str("uniform"),
            RedistributionKind::DeltaHalf => f.write_str("delta-half"),
            RedistributionKind::BetaSymmetric { k } => write!(f, "beta:{k}"),
            RedistributionKind::TwoAtomSymmetric { p } => write!(f, "two-atom:{p}"),
        }
    }
}

impl FromStr for RedistributionLaw {
    type Err = ParamError;

    /// `uniform`, `delta-half`, `beta:K`, `two-atom:P`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let number = |a: Option<&str>| -> Result<f64, ParamError> {
            a.ok_or_else(|| ParamError::Redistribution(format!("`{name}` needs a numeric argument")))?
                .trim()
                .parse::<f64>()
                .map_err(|e| ParamError::Redistribution(format!("`{s}`: {e}")))
        };
        let kind = match (name, arg) {
            ("uniform", None) => RedistributionKind::Uniform,
            ("delta-half", None) => RedistributionKind::DeltaHalf,
            ("beta", a) => RedistributionKind::BetaSymmetric { k: number(a)? },
            ("two-atom", a) => RedistributionKind::TwoAtomSymmetric { p: number(a)? },
            _ => return Err(ParamError::Redistribution(format!("unknown law `{s}`"))),
        };
        Self::new(kind)
    }
}

/// Which family a reservoir law is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReservoirKind {
    Deterministic,
    Gamma,
    TwoAtom,
}

impl fmt::Display for ReservoirKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReservoirKind::Deterministic => "deterministic",
            ReservoirKind::Gamma => "gamma",
            ReservoirKind::TwoAtom => "two-atom",
        })
    }
}

impl FromStr for ReservoirKind {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "deterministic" => Ok(Self::Deterministic),
            "gamma" => Ok(Self::Gamma),
            "two-atom" => Ok(Self::TwoAtom),
            other => Err(ParamError::Reservoir(format!("unknown reservoir kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum ReservoirSampler {
    Point(f64),
    Gamma(Gamma<f64>),
    /// `low` with probability `1 − p_high`, `high` otherwise.
    Atoms {
        low: f64,
        high: f64,
        p_high: f64,
    },
}

/// A nonnegative law with prescribed mean and second moment.
#[derive(Debug, Clone, Copy)]
pub struct ReservoirLaw {
    kind: ReservoirKind,
    mean: f64,
    second_moment: f64,
    sampler: ReservoirSampler,
}

impl ReservoirLaw {
    pub fn new(kind: ReservoirKind, mean: f64, second_moment: f64) -> Result<Self, ParamError> {
        if !(mean.is_finite() && second_moment.is_finite()) {
            return Err(ParamError::Reservoir("moments must be finite".into()));
        }
        if mean < 0.0 {
            return Err(ParamError::Reservoir(format!("negative mean {mean}")));
        }
        let variance = second_moment - mean * mean;
        let zero_variance = variance.abs() <= 1e-12 * second_moment.max(1.0);
        if variance < 0.0 && !zero_variance {
            return Err(ParamError::Reservoir(format!(
                "second moment {second_moment} below squared mean {}",
                mean * mean
            )));
        }
        let sampler = match kind {
            ReservoirKind::Deterministic => {
                if !zero_variance {
                    return Err(ParamError::Reservoir(format!(
                        "deterministic law needs zero variance, got {variance}"
                    )));
                }
                ReservoirSampler::Point(mean)
            }
            _ if zero_variance => {
                return Err(ParamError::Reservoir(format!(
                    "{kind} law needs positive variance; use `deterministic`"
                )));
            }
            _ if mean == 0.0 => {
                return Err(ParamError::Reservoir(
                    "a nonnegative law with mean 0 has second moment 0".into(),
                ));
            }
            ReservoirKind::Gamma => {
                let shape = mean * mean / variance;
                let scale = variance / mean;
                ReservoirSampler::Gamma(Gamma::new(shape, scale).map_err(|e| ParamError::Reservoir(e.to_string()))?)
            }
            ReservoirKind::TwoAtom => {
                let sd = variance.sqrt();
                if mean >= sd {
                    ReservoirSampler::Atoms {
                        low: mean - sd,
                        high: mean + sd,
                        p_high: 0.5,
                    }
                } else {
                    // mean ± sd would leave [0, ∞); anchor one atom at zero.
                    ReservoirSampler::Atoms {
                        low: 0.0,
                        high: second_moment / mean,
                        p_high: mean * mean / second_moment,
                    }
                }
            }
        };
        Ok(Self {
            kind,
            mean,
            second_moment,
            sampler,
        })
    }

    pub fn deterministic(value: f64) -> Result<Self, ParamError> {
        Self::new(ReservoirKind::Deterministic, value, value * value)
    }

    pub fn kind(&self) -> ReservoirKind {
        self.kind
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    pub fn variance(&self) -> f64 {
        (self.second_moment - self.mean * self.mean).max(0.0)
    }

    /// Mean and second moment of the law as actually constructed.
    pub fn realized_moments(&self) -> (f64, f64) {
        match self.sampler {
            ReservoirSampler::Point(v) => (v, v * v),
            ReservoirSampler::Gamma(_) => {
                let shape = self.mean * self.mean / self.variance();
                let scale = self.variance() / self.mean;
                (shape * scale, shape * (shape + 1.0) * scale * scale)
            }
            ReservoirSampler::Atoms { low, high, p_high } => (
                (1.0 - p_high) * low + p_high * high,
                (1.0 - p_high) * low * low + p_high * high * high,
            ),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.sampler {
            ReservoirSampler::Point(v) => v,
            ReservoirSampler::Gamma(g) => g.sample(rng),
            ReservoirSampler::Atoms { low, high, p_high } => {
                if rng.random_bool(p_high) {
                    high
                } else {
                    low
                }
            }
        }
    }
}

/// The generator coefficients A, B, C that appear in the two-point
/// stationarity equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorCoefficients {
    pub a_coef: f64,
    pub b_coef: f64,
    pub c_coef: f64,
}

pub fn coefficients(alpha: f64, lambda: f64) -> Result<GeneratorCoefficients, ParamError> {
    let alpha = validate_alpha(alpha)?;
    if !(0.0..1.0).contains(&lambda) {
        return Err(ParamError::LambdaOutOfRange(lambda));
    }
    let mu = 1.0 - lambda;
    Ok(GeneratorCoefficients {
        a_coef: (0.5 - alpha) * mu,
        b_coef: 1.0 - 2.0 * alpha * mu,
        c_coef: lambda / 2.0 + alpha * mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn base() -> ModelParams {
        ModelParams::new(5, 0.5, 1.0, 2.0, 1.5, 4.5)
    }

    #[test]
    fn validate_accepts_admissible() {
        assert_eq!(base().validate(), Ok(base()));
    }

    #[test]
    fn validate_rejects_lambda_one() {
        let p = ModelParams { lambda: 1.0, ..base() };
        let err = p.validate().unwrap_err();
        assert!(err.to_string().starts_with("lambda out of range"), "{err}");
    }

    #[test]
    fn validate_rejects_small_second_moment() {
        let p = ModelParams {
            t_left: 2.0,
            l2: 3.0,
            ..base()
        };
        let err = p.validate().unwrap_err();
        assert!(err.to_string().starts_with("second moment below squared mean"), "{err}");
    }

    #[test]
    fn validate_rejects_short_chain_and_bad_gamma() {
        assert_eq!(
            ModelParams { n_sites: 2, ..base() }.validate(),
            Err(ParamError::TooFewSites(2))
        );
        assert!(matches!(
            base().with_gammas(1.0, 0.0).validate(),
            Err(ParamError::NonPositiveGamma { side: Side::Right, .. })
        ));
        assert!(matches!(
            ModelParams {
                lambda: f64::NAN,
                ..base()
            }
            .validate(),
            Err(ParamError::NonFinite("lambda"))
        ));
    }

    #[test]
    fn alpha_examples() {
        assert_relative_eq!(alpha_of_law(RedistributionKind::Uniform), 1.0 / 6.0);
        assert_eq!(alpha_of_law(RedistributionKind::DeltaHalf), 0.25);
        assert_relative_eq!(alpha_of_law(RedistributionKind::BetaSymmetric { k: 1.0 }), 1.0 / 6.0);
    }

    /// Ratio of ∫ε(1−ε)w(ε)dε to ∫w(ε)dε with w = ε^{k−1}(1−ε)^{k−1}, after
    /// ε = sin²θ so the integrands are smooth for k >= 1/2.
    fn beta_alpha_quadrature(k: f64) -> f64 {
        let n = 20_000;
        let h = std::f64::consts::FRAC_PI_2 / n as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for m in 0..=n {
            let th = m as f64 * h;
            let (s, c) = th.sin_cos();
            let w = 2.0 * s.powf(2.0 * k - 1.0) * c.powf(2.0 * k - 1.0);
            let simpson = if m == 0 || m == n {
                1.0
            } else if m % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let eps = s * s;
            den += simpson * w;
            num += simpson * w * eps * (1.0 - eps);
        }
        num / den
    }

    #[test]
    fn beta_alpha_matches_quadrature() {
        for k in [0.5, 1.0, 2.0, 5.0] {
            let closed = alpha_of_law(RedistributionKind::BetaSymmetric { k });
            assert_relative_eq!(closed, beta_alpha_quadrature(k), max_relative = 1e-9);
        }
    }

    #[test]
    fn law_parse_round_trip() {
        for s in ["uniform", "delta-half", "beta:2", "two-atom:0.3"] {
            let law: RedistributionLaw = s.parse().unwrap();
            assert_eq!(law.to_string(), s);
        }
        assert!("beta:-1".parse::<RedistributionLaw>().is_err());
        assert!("two-atom:0".parse::<RedistributionLaw>().is_err());
        assert!("cauchy".parse::<RedistributionLaw>().is_err());
    }

    fn mean_and_se(samples: impl Iterator<Item = f64>) -> (f64, f64) {
        let (mut n, mut s, mut s2) = (0.0, 0.0, 0.0);
        for v in samples {
            n += 1.0;
            s += v;
            s2 += v * v;
        }
        let m = s / n;
        (m, ((s2 / n - m * m).max(0.0) / n).sqrt())
    }

    #[test]
    fn samplers_match_declared_alpha() {
        let draws = 1_000_000;
        for law in ["uniform", "delta-half", "beta:0.5", "beta:3", "two-atom:0.2"] {
            let law: RedistributionLaw = law.parse().unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let eps: Vec<f64> = (0..draws).map(|_| law.sample(&mut rng)).collect();
            assert!(eps.iter().all(|e| (0.0..=1.0).contains(e)));
            let (m, se) = mean_and_se(eps.iter().copied());
            assert!((m - 0.5).abs() <= 4.0 * se + 1e-15, "{law}: mean {m} se {se}");
            let (a, se) = mean_and_se(eps.iter().map(|e| e * (1.0 - e)));
            assert!(
                (a - law.alpha()).abs() <= 4.0 * se + 1e-9,
                "{law}: alpha {a} vs {}",
                law.alpha()
            );
        }
    }

    #[test]
    fn reservoir_laws_realize_moments() {
        let cases = [
            (ReservoirKind::Deterministic, 1.5, 2.25),
            (ReservoirKind::Gamma, 1.0, 2.5),
            (ReservoirKind::TwoAtom, 2.0, 5.0),
            // variance above mean²: zero-anchored atoms
            (ReservoirKind::TwoAtom, 1.0, 2.0 + 1.0 / 30.0),
        ];
        for (kind, mean, m2) in cases {
            let law = ReservoirLaw::new(kind, mean, m2).unwrap();
            let (rm, rm2) = law.realized_moments();
            assert_relative_eq!(rm, mean, max_relative = 1e-12);
            assert_relative_eq!(rm2, m2, max_relative = 1e-12);
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let xs: Vec<f64> = (0..400_000).map(|_| law.sample(&mut rng)).collect();
            assert!(xs.iter().all(|&x| x >= 0.0));
            let (m, se) = mean_and_se(xs.iter().copied());
            assert!((m - mean).abs() <= 4.0 * se + 1e-12, "{kind}: {m} vs {mean}");
            let (s, se) = mean_and_se(xs.iter().map(|x| x * x));
            assert!((s - m2).abs() <= 4.0 * se + 1e-12, "{kind}: {s} vs {m2}");
        }
    }

    #[test]
    fn reservoir_rejections() {
        assert!(ReservoirLaw::new(ReservoirKind::Deterministic, 1.0, 2.0).is_err());
        assert!(ReservoirLaw::new(ReservoirKind::Gamma, 1.0, 1.0).is_err());
        assert!(ReservoirLaw::new(ReservoirKind::TwoAtom, 0.0, 0.1).is_err());
        assert!(ReservoirLaw::new(ReservoirKind::Gamma, 2.0, 3.0).is_err());
        assert!(ReservoirLaw::new(ReservoirKind::Gamma, -1.0, 3.0).is_err());
    }

    #[test]
    fn coefficient_examples() {
        let c = coefficients(0.25, 0.0).unwrap();
        assert_relative_eq!(c.a_coef, 0.25);
        assert_relative_eq!(c.b_coef, 0.5);
        assert_relative_eq!(c.c_coef, 0.25);
        let c = coefficients(1.0 / 6.0, 0.0).unwrap();
        assert_relative_eq!(c.a_coef, 1.0 / 3.0);
        assert_relative_eq!(c.b_coef, 2.0 / 3.0);
        assert_relative_eq!(c.c_coef, 1.0 / 6.0);
        assert!(coefficients(0.3, 0.0).is_err());
        assert!(coefficients(0.1, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn coefficient_identities(alpha in 1e-6..=0.25_f64, lambda in 0.0..0.999_f64) {
            let c = coefficients(alpha, lambda).unwrap();
            prop_assert!((c.b_coef - (lambda + (1.0 - 2.0 * alpha) * (1.0 - lambda))).abs() < 1e-14);
            prop_assert!((c.a_coef + c.c_coef - 0.5).abs() < 1e-14);
            let s = lambda + 2.0 * alpha * (1.0 - lambda);
            prop_assert!((1.0 - 2.0 * c.a_coef - s).abs() < 1e-14);
            prop_assert!(s > 0.0);
        }
    }
}
