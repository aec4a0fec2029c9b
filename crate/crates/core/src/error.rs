use thiserror::Error;

/// Which reservoir a boundary-related error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Left => f.write_str("left"),
            Side::Right => f.write_str("right"),
        }
    }
}

/// A violated parameter invariant. The display strings are stable and are
/// matched by callers and tests.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("too few sites: N = {0}, need N >= 3")]
    TooFewSites(usize),
    #[error("lambda out of range: {0} not in [0, 1)")]
    LambdaOutOfRange(f64),
    #[error("alpha out of range: {0} not in (0, 1/4]")]
    AlphaOutOfRange(f64),
    #[error("{0} is not finite")]
    NonFinite(&'static str),
    #[error("negative {side} reservoir mean: {value}")]
    NegativeMean { side: Side, value: f64 },
    #[error("second moment below squared mean ({side}): {second_moment} < {mean}^2")]
    SecondMomentBelowSquaredMean { side: Side, mean: f64, second_moment: f64 },
    #[error("non-positive {side} boundary rate gamma: {value}")]
    NonPositiveGamma { side: Side, value: f64 },
    #[error("invalid redistribution law: {0}")]
    Redistribution(String),
    #[error("invalid reservoir law: {0}")]
    Reservoir(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("site pair ({i}, {j}) out of range for N = {n}")]
    IndexOutOfRange { i: usize, j: usize, n: usize },
    #[error("closed form requires gamma_left = gamma_right = 1 (got {gamma_left}, {gamma_right})")]
    UnitRatesRequired { gamma_left: f64, gamma_right: f64 },
    #[error("singular stationarity system at {context}")]
    Singular { context: String },
    #[error("stationarity residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },
    #[error("rank-deficient multilinear design at N = {n} (need N >= 4)")]
    RankDeficient { n: usize },
    #[error("insufficient events: {post_burn_in} after burn-in cannot fill {batches} batches (need >= {min_batches} batches of >= {min_per_batch} events)")]
    InsufficientEvents {
        post_burn_in: u64,
        batches: usize,
        min_batches: usize,
        min_per_batch: u64,
    },
    #[error("{side} reservoir law has {what} {law}, params declare {declared}")]
    LawMismatch {
        side: Side,
        what: &'static str,
        law: f64,
        declared: f64,
    },
    #[error("shape mismatch: N = {left} vs N = {right}")]
    ShapeMismatch { left: usize, right: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
