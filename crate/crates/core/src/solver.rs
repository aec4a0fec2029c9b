//! Exact stationary two-point moments.
//!
//! Applying the generator to `f_ij = x_i x_j` and taking stationary
//! expectations gives one linear equation per unordered pair `i <= j`. The
//! right-hand sides only involve first moments and the reservoir moments,
//! so the `N(N+1)/2` equations close. Rows are assembled bond by bond from
//! the exchange rule rather than from a case table, which also covers the
//! corner pairs such as `(1, N)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{coefficients, GeneratorCoefficients, ModelParams};
use crate::profile::{profile_solve, Profile};
use crate::tolerances::SOLVER_RESIDUAL;

/// Bijection between pairs `1 <= i <= j <= N` and `0..N(N+1)/2`, row-major
/// over the upper triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairIndex {
    n: usize,
}

impl PairIndex {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Index of the pair `{i, j}` (either order), 1-based sites.
    pub fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        debug_assert!(i >= 1 && j <= self.n);
        let r = i - 1;
        r * self.n - r * (r.saturating_sub(1)) / 2 + (j - i)
    }

    pub fn pairs(self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.n;
        (1..=n).flat_map(move |i| (i..=n).map(move |j| (i, j)))
    }
}

#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub index: PairIndex,
}

impl LinearSystem {
    /// Coefficient of `μ_{k,l}` in the row for pair `(i, j)`.
    pub fn coefficient(&self, row: (usize, usize), col: (usize, usize)) -> f64 {
        self.matrix[(self.index.index(row.0, row.1), self.index.index(col.0, col.1))]
    }

    pub fn rhs_of(&self, row: (usize, usize)) -> f64 {
        self.rhs[self.index.index(row.0, row.1)]
    }

    /// Largest absolute row residual `|M x − r|`.
    pub fn max_residual(&self, x: &DVector<f64>) -> f64 {
        (&self.matrix * x - &self.rhs).amax()
    }
}

/// Stationary two-point moments `μ_ij`, `1 <= i <= j <= N`, with the
/// profile and reservoir moments that produced them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentMatrix {
    n_sites: usize,
    /// Packed upper triangle in [`PairIndex`] order.
    mu: Vec<f64>,
    pub profile: Profile,
    pub l2: f64,
    pub r2: f64,
    pub params: ModelParams,
    pub alpha: f64,
}

impl MomentMatrix {
    /// `packed` must follow [`PairIndex`] order.
    pub fn from_packed(params: ModelParams, alpha: f64, profile: Profile, packed: Vec<f64>) -> Self {
        assert_eq!(packed.len(), PairIndex::new(params.n_sites).len());
        assert_eq!(profile.values.len(), params.n_sites + 2);
        Self {
            n_sites: params.n_sites,
            mu: packed,
            profile,
            l2: params.l2,
            r2: params.r2,
            params,
            alpha,
        }
    }

    /// Builds from a function of `(i, j)`, `1 <= i <= j <= N`.
    pub fn from_fn(params: ModelParams, alpha: f64, profile: Profile, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let packed = PairIndex::new(params.n_sites).pairs().map(|(i, j)| f(i, j)).collect();
        Self::from_packed(params, alpha, profile, packed)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// `μ_ij` for chain sites, symmetric in `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mu[PairIndex::new(self.n_sites).index(i, j)]
    }

    /// `μ_ij` for `0 <= i, j <= N+1`, ghost entries filled by convention.
    pub fn extended(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let n = self.n_sites;
        match (i, j) {
            (0, 0) => self.l2,
            (0, _) => self.params.t_left * self.profile.at(j),
            (_, _) if i == n + 1 => self.r2,
            (_, _) if j == n + 1 => self.params.t_right * self.profile.at(i),
            _ => self.get(i, j),
        }
    }

    pub fn packed(&self) -> &[f64] {
        &self.mu
    }

    /// `max(1, max |μ_ij|)`.
    pub fn scale(&self) -> f64 {
        crate::tolerances::scale_of(self.mu.iter().copied())
    }
}

/// `C_N(i, j)` over `0..=N+1` squared, symmetric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub n_sites: usize,
    values: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * (self.n_sites + 2) + j]
    }
}

struct RowBuilder<'a> {
    row: usize,
    n: usize,
    index: PairIndex,
    matrix: &'a mut DMatrix<f64>,
    rhs: &'a mut DVector<f64>,
    params: &'a ModelParams,
    profile: &'a Profile,
}

impl RowBuilder<'_> {
    /// Adds `coef · E[x_a x_b]`, `a, b ∈ 0..=N+1`. Ghost terms are known
    /// constants and go to the right-hand side.
    fn add(&mut self, coef: f64, a: usize, b: usize) {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let n = self.n;
        let known = match (a, b) {
            (0, 0) => Some(self.params.l2),
            (0, _) => Some(self.params.t_left * self.profile.at(b)),
            _ if a == n + 1 => Some(self.params.r2),
            _ if b == n + 1 => Some(self.params.t_right * self.profile.at(a)),
            _ => None,
        };
        match known {
            Some(v) => self.rhs[self.row] -= coef * v,
            None => self.matrix[(self.row, self.index.index(a, b))] += coef,
        }
    }
}

/// Assembles the stationarity equations for `E[x_i x_j]`.
///
/// Row scaling: the diagonal and nearest-neighbour rows are the generator
/// divided by `(1−λ)`, the rest by `(1−λ)/2`, so an interior row reads
/// `μ_{i+1,j} + μ_{i−1,j} + μ_{i,j+1} + μ_{i,j−1} − 4μ_{ij} = 0`.
pub fn build_system(p: &ModelParams, alpha: f64, profile: &Profile) -> Result<LinearSystem> {
    let GeneratorCoefficients { a_coef, b_coef, c_coef } = coefficients(alpha, p.lambda)?;
    let n = p.n_sites;
    let index = PairIndex::new(n);
    let m = index.len();
    let mut matrix = DMatrix::zeros(m, m);
    let mut rhs = DVector::zeros(m);
    // Bond k joins sites k and k+1, k = 0..=N; 0 and N+1 are ghosts.
    let rate = |k: usize| {
        if k == 0 {
            p.gamma_left
        } else if k == n {
            p.gamma_right
        } else {
            1.0
        }
    };
    let is_site = |s: usize| (1..=n).contains(&s);
    // x_i x_{i+1} after a joint exchange, minus before, over (1−λ):
    // C·x_i² + C·x_{i+1}² + (2C − 1 − λ)·x_i x_{i+1}.
    let adjacent_self = 2.0 * c_coef - 1.0 - p.lambda;

    for (row, (i, j)) in index.pairs().enumerate() {
        let mut rb = RowBuilder {
            row,
            n,
            index,
            matrix: &mut matrix,
            rhs: &mut rhs,
            params: p,
            profile,
        };
        for k in 0..=n {
            let (s, t) = (k, k + 1);
            let r = rate(k);
            let touches = |x: usize| is_site(x) && (x == s || x == t);
            let partner = |x: usize| if x == s { t } else { s };
            if i == j {
                if touches(i) {
                    let m_ = partner(i);
                    rb.add(-r * (1.0 - a_coef), i, i);
                    rb.add(r * b_coef, i, m_);
                    rb.add(r * a_coef, m_, m_);
                }
            } else if touches(i) && touches(j) {
                rb.add(r * c_coef, i, i);
                rb.add(r * c_coef, j, j);
                rb.add(r * adjacent_self, i, j);
            } else {
                // One factor moves toward the mean of its bond.
                for (moving, fixed) in [(i, j), (j, i)] {
                    if touches(moving) {
                        rb.add(0.5 * r, partner(moving), fixed);
                        rb.add(-0.5 * r, moving, fixed);
                    }
                }
            }
        }
        if j >= i + 2 {
            let mut r = matrix.row_mut(row);
            r *= 2.0;
            rhs[row] *= 2.0;
        }
    }
    Ok(LinearSystem { matrix, rhs, index })
}

fn residual_scale(p: &ModelParams) -> f64 {
    1.0_f64.max(p.l2).max(p.r2).max(p.t_left * p.t_right)
}

/// Solves for all stationary `μ_ij`. `p` must be validated.
pub fn solve_two_point(p: &ModelParams, alpha: f64) -> Result<MomentMatrix> {
    let profile = profile_solve(p);
    let system = build_system(p, alpha, &profile)?;
    let lu = system.matrix.clone().lu();
    let x = lu.solve(&system.rhs).ok_or_else(|| Error::Singular {
        context: format!("{p:?}, alpha = {alpha}"),
    })?;
    let residual = system.max_residual(&x);
    let tolerance = SOLVER_RESIDUAL * residual_scale(p);
    // Also rejects a NaN residual.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(residual < tolerance) {
        return Err(Error::Residual { residual, tolerance });
    }
    Ok(MomentMatrix::from_packed(
        *p,
        alpha,
        profile,
        x.iter().copied().collect(),
    ))
}

/// `C_N(i, j) = μ_ij − E_N(i)E_N(j)` over `0..=N+1`, with the ghost rows and
/// columns zero off the diagonal and the reservoir variances on it.
pub fn correlations(m: &MomentMatrix) -> CorrelationMatrix {
    let n = m.n_sites();
    let size = n + 2;
    let mut values = vec![0.0; size * size];
    for i in 0..size {
        for j in 0..size {
            let ghost = i == 0 || j == 0 || i == n + 1 || j == n + 1;
            values[i * size + j] = if ghost && i != j {
                0.0
            } else {
                m.extended(i, j) - m.profile.at(i) * m.profile.at(j)
            };
        }
    }
    CorrelationMatrix { n_sites: n, values }
}
