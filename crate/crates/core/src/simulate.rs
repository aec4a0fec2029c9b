//! Continuous-time kinetic Monte Carlo for the chain.
//!
//! Every bond `(k, k+1)`, `k = 0..=N`, rings at its own exponential clock:
//! rate 1 in the bulk, `γ_L` and `γ_R` on the two reservoir bonds. Since the
//! rates do not depend on the state, the holding time is `Exp(total rate)`
//! and the bond is chosen proportionally to its rate.
//!
//! Estimates are time-weighted averages over the trajectory after burn-in,
//! with standard errors from contiguous batch means.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result, Side};
use crate::model::{ModelParams, RedistributionLaw, ReservoirLaw};
use crate::profile::{profile_solve, Profile};
use crate::solver::{MomentMatrix, PairIndex};
use crate::tolerances::LAW_MOMENT_MATCH;

pub const MIN_BATCHES: usize = 32;
pub const MIN_EVENTS_PER_BATCH: u64 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    /// Wealth at sites `1..=N`, stored 0-based.
    pub x: Vec<f64>,
    pub t: f64,
}

impl ChainState {
    pub fn new(x: Vec<f64>) -> Self {
        Self { x, t: 0.0 }
    }

    /// Starts every site at its stationary mean.
    pub fn from_profile(profile: &Profile) -> Self {
        let n = profile.n_sites();
        Self::new(profile.values[1..=n].to_vec())
    }

    pub fn total(&self) -> f64 {
        self.x.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventSchedule {
    n_sites: usize,
    gamma_left: f64,
    gamma_right: f64,
}

impl EventSchedule {
    /// Zero boundary rates are accepted here so the closed chain can be run;
    /// validated params always have positive ones.
    pub fn new(n_sites: usize, gamma_left: f64, gamma_right: f64) -> Self {
        assert!(n_sites >= 2, "need at least one interior bond");
        assert!(gamma_left >= 0.0 && gamma_right >= 0.0);
        Self {
            n_sites,
            gamma_left,
            gamma_right,
        }
    }

    pub fn from_params(p: &ModelParams) -> Self {
        Self::new(p.n_sites, p.gamma_left, p.gamma_right)
    }

    pub fn n_bonds(&self) -> usize {
        self.n_sites + 1
    }

    /// Rate of bond `k`, joining sites `k` and `k+1`.
    pub fn rate(&self, bond: usize) -> f64 {
        if bond == 0 {
            self.gamma_left
        } else if bond == self.n_sites {
            self.gamma_right
        } else {
            1.0
        }
    }

    pub fn total_rate(&self) -> f64 {
        (self.n_sites - 1) as f64 + self.gamma_left + self.gamma_right
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let mut u = rng.random::<f64>() * self.total_rate();
        if u < self.gamma_left {
            return 0;
        }
        u -= self.gamma_left;
        let interior = (self.n_sites - 1) as f64;
        if u < interior {
            1 + (u as usize).min(self.n_sites - 2)
        } else {
            self.n_sites
        }
    }
}

/// Everything needed to replay one jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub bond: usize,
    pub dt: f64,
    pub epsilon: f64,
    /// The reservoir value drawn for a boundary bond.
    pub ghost: Option<f64>,
}

/// Applies one exchange across `bond`. The site with the lower index gets
/// the `epsilon` share.
pub fn apply_event(lambda: f64, x: &mut [f64], bond: usize, epsilon: f64, ghost: Option<f64>) {
    let n = x.len();
    let mu = 1.0 - lambda;
    if bond == 0 {
        let g = ghost.expect("left boundary event needs a ghost value");
        x[0] = lambda * x[0] + epsilon * mu * (g + x[0]);
    } else if bond == n {
        let g = ghost.expect("right boundary event needs a ghost value");
        x[n - 1] = lambda * x[n - 1] + epsilon * mu * (x[n - 1] + g);
    } else {
        let (k, l) = (bond - 1, bond);
        let pooled = x[k] + x[l];
        let left = (lambda * x[k] + epsilon * mu * pooled).min(pooled);
        x[k] = left;
        x[l] = pooled - left;
        debug_assert!((x[k] + x[l] - pooled).abs() <= 4.0 * f64::EPSILON * pooled);
    }
}

/// One jump of the chain given its laws.
#[derive(Debug, Clone, Copy)]
pub struct Dynamics<'a> {
    pub lambda: f64,
    pub schedule: EventSchedule,
    pub nu: &'a RedistributionLaw,
    pub left: &'a ReservoirLaw,
    pub right: &'a ReservoirLaw,
}

impl<'a> Dynamics<'a> {
    pub fn new(p: &ModelParams, nu: &'a RedistributionLaw, left: &'a ReservoirLaw, right: &'a ReservoirLaw) -> Self {
        Self {
            lambda: p.lambda,
            schedule: EventSchedule::from_params(p),
            nu,
            left,
            right,
        }
    }

    fn holding_time<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let e: f64 = Exp1.sample(rng);
        e / self.schedule.total_rate()
    }

    fn jump<R: Rng + ?Sized>(&self, state: &mut ChainState, dt: f64, rng: &mut R) -> EventRecord {
        let bond = self.schedule.pick(rng);
        let epsilon = self.nu.sample(rng);
        let ghost = if bond == 0 {
            Some(self.left.sample(rng))
        } else if bond == self.schedule.n_sites {
            Some(self.right.sample(rng))
        } else {
            None
        };
        apply_event(self.lambda, &mut state.x, bond, epsilon, ghost);
        EventRecord {
            bond,
            dt,
            epsilon,
            ghost,
        }
    }

    /// Waits an exponential holding time, then performs one exchange.
    pub fn step<R: Rng + ?Sized>(&self, state: &mut ChainState, rng: &mut R) -> EventRecord {
        let dt = self.holding_time(rng);
        state.t += dt;
        self.jump(state, dt, rng)
    }

    /// Runs `events` steps, logging each event and the chain total after it.
    pub fn total_wealth_trace<R: Rng + ?Sized>(
        &self,
        state: &mut ChainState,
        events: usize,
        rng: &mut R,
    ) -> WealthTrace {
        let initial_total = state.total();
        let mut records = Vec::with_capacity(events);
        let mut totals = Vec::with_capacity(events);
        for _ in 0..events {
            records.push(self.step(state, rng));
            totals.push(state.total());
        }
        WealthTrace {
            initial_total,
            records,
            totals,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WealthTrace {
    pub initial_total: f64,
    pub records: Vec<EventRecord>,
    /// Chain total after each event.
    pub totals: Vec<f64>,
}

impl WealthTrace {
    /// Change of the total at each event.
    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.initial_total)
            .chain(self.totals.iter().copied())
            .zip(self.totals.iter().copied())
            .map(|(before, after)| after - before)
    }
}

/// Per-event chain totals along a stored sequence of states.
pub fn total_wealth_trace<'a>(states: impl IntoIterator<Item = &'a ChainState>) -> Vec<f64> {
    states.into_iter().map(ChainState::total).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimulationControls {
    pub events: u64,
    pub burn_in: u64,
    pub batches: usize,
    pub seed: u64,
    pub replicas: usize,
}

impl SimulationControls {
    /// 20% burn-in, 64 batches, one replica.
    pub fn new(events: u64, seed: u64) -> Self {
        Self {
            events,
            burn_in: events / 5,
            batches: 64,
            seed,
            replicas: 1,
        }
    }

    fn check(&self) -> Result<()> {
        let post = self.events.saturating_sub(self.burn_in);
        if self.batches < MIN_BATCHES || self.replicas == 0 || post < self.batches as u64 * MIN_EVENTS_PER_BATCH {
            return Err(Error::InsufficientEvents {
                post_burn_in: post,
                batches: self.batches,
                min_batches: MIN_BATCHES,
                min_per_batch: MIN_EVENTS_PER_BATCH,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_batches: usize,
    pub sim_time: f64,
}

/// Estimates of `E_N(i)` and `μ_ij` from one or more trajectories.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationEstimate {
    pub params: ModelParams,
    pub alpha: f64,
    pub controls: SimulationControls,
    /// `E_N(i)`, `i = 1..=N`, stored 0-based.
    pub profile: Vec<MomentEstimate>,
    /// `μ_ij` in [`PairIndex`] order.
    pub moments: Vec<MomentEstimate>,
    /// Same observables averaged per event instead of per unit time.
    pub event_weighted_profile: Vec<MomentEstimate>,
    pub event_weighted_moments: Vec<MomentEstimate>,
    pub sim_time: f64,
}

impl SimulationEstimate {
    pub fn profile_at(&self, i: usize) -> &MomentEstimate {
        &self.profile[i - 1]
    }

    pub fn moment(&self, i: usize, j: usize) -> &MomentEstimate {
        &self.moments[PairIndex::new(self.params.n_sites).index(i, j)]
    }

    /// Point estimates as a [`MomentMatrix`]; the ends of the profile are the
    /// reservoir means.
    pub fn moment_matrix(&self) -> MomentMatrix {
        let mut values = Vec::with_capacity(self.params.n_sites + 2);
        values.push(self.params.t_left);
        values.extend(self.profile.iter().map(|e| e.mean));
        values.push(self.params.t_right);
        MomentMatrix::from_packed(
            self.params,
            self.alpha,
            Profile { values },
            self.moments.iter().map(|e| e.mean).collect(),
        )
    }
}

#[derive(Debug, Clone)]
struct Batch {
    time: f64,
    events: u64,
    time_sums: Vec<f64>,
    event_sums: Vec<f64>,
}

impl Batch {
    fn new(k: usize) -> Self {
        Self {
            time: 0.0,
            events: 0,
            time_sums: vec![0.0; k],
            event_sums: vec![0.0; k],
        }
    }
}

fn observe(x: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend_from_slice(x);
    for i in 0..x.len() {
        for j in i..x.len() {
            out.push(x[i] * x[j]);
        }
    }
}

fn run_replica(
    dynamics: &Dynamics<'_>,
    start: &ChainState,
    controls: &SimulationControls,
    replica: usize,
) -> Vec<Batch> {
    let mut rng = ChaCha8Rng::seed_from_u64(controls.seed);
    rng.set_stream(replica as u64);
    let mut state = start.clone();
    for _ in 0..controls.burn_in {
        dynamics.step(&mut state, &mut rng);
    }

    let n = state.x.len();
    let k = n + n * (n + 1) / 2;
    let post = controls.events - controls.burn_in;
    let per_batch = post / controls.batches as u64;
    let mut batches = Vec::with_capacity(controls.batches);
    let mut obs = Vec::with_capacity(k);
    for b in 0..controls.batches {
        let count = if b + 1 == controls.batches {
            post - per_batch * (controls.batches as u64 - 1)
        } else {
            per_batch
        };
        let mut batch = Batch::new(k);
        for _ in 0..count {
            let dt = dynamics.holding_time(&mut rng);
            observe(&state.x, &mut obs);
            for ((ts, es), &v) in batch.time_sums.iter_mut().zip(&mut batch.event_sums).zip(&obs) {
                *ts += v * dt;
                *es += v;
            }
            batch.time += dt;
            batch.events += 1;
            state.t += dt;
            dynamics.jump(&mut state, dt, &mut rng);
        }
        batches.push(batch);
    }
    batches
}

fn summarize(batches: &[Batch], weighted_by_time: bool, k: usize) -> Vec<MomentEstimate> {
    let nb = batches.len();
    let total_time: f64 = batches.iter().map(|b| b.time).sum();
    let total_events: u64 = batches.iter().map(|b| b.events).sum();
    (0..k)
        .map(|o| {
            let (sum, weight) = if weighted_by_time {
                (batches.iter().map(|b| b.time_sums[o]).sum::<f64>(), total_time)
            } else {
                (
                    batches.iter().map(|b| b.event_sums[o]).sum::<f64>(),
                    total_events as f64,
                )
            };
            let mean = sum / weight;
            let batch_means = batches.iter().map(|b| {
                if weighted_by_time {
                    b.time_sums[o] / b.time
                } else {
                    b.event_sums[o] / b.events as f64
                }
            });
            let bm_mean = batch_means.clone().sum::<f64>() / nb as f64;
            let var = batch_means.map(|m| (m - bm_mean).powi(2)).sum::<f64>() / (nb - 1) as f64;
            MomentEstimate {
                mean,
                std_error: (var / nb as f64).sqrt(),
                n_batches: nb,
                sim_time: total_time,
            }
        })
        .collect()
}

fn check_law(side: Side, law: &ReservoirLaw, mean: f64, second_moment: f64) -> Result<()> {
    let (m, s) = law.realized_moments();
    for (what, got, want) in [("mean", m, mean), ("second moment", s, second_moment)] {
        if (got - want).abs() > LAW_MOMENT_MATCH * want.abs().max(1.0) {
            return Err(Error::LawMismatch {
                side,
                what,
                law: got,
                declared: want,
            });
        }
    }
    Ok(())
}

/// Simulates `controls.replicas` independent trajectories from the
/// stationary profile and pools their batches. Replica `r` uses stream `r`
/// of the ChaCha generator seeded with `controls.seed`, so the result is a
/// deterministic function of the inputs regardless of thread scheduling.
pub fn run(
    p: &ModelParams,
    nu: &RedistributionLaw,
    left: &ReservoirLaw,
    right: &ReservoirLaw,
    controls: &SimulationControls,
) -> Result<SimulationEstimate> {
    let p = p.validate()?;
    controls.check()?;
    check_law(Side::Left, left, p.t_left, p.l2)?;
    check_law(Side::Right, right, p.t_right, p.r2)?;

    let dynamics = Dynamics::new(&p, nu, left, right);
    let start = ChainState::from_profile(&profile_solve(&p));
    let replicas: Vec<Vec<Batch>> = (0..controls.replicas)
        .into_par_iter()
        .map(|r| run_replica(&dynamics, &start, controls, r))
        .collect();
    let pooled: Vec<Batch> = replicas.into_iter().flatten().collect();

    let n = p.n_sites;
    let k = n + n * (n + 1) / 2;
    let mut time_weighted = summarize(&pooled, true, k);
    let mut event_weighted = summarize(&pooled, false, k);
    let moments = time_weighted.split_off(n);
    let event_weighted_moments = event_weighted.split_off(n);
    Ok(SimulationEstimate {
        params: p,
        alpha: nu.alpha(),
        controls: *controls,
        profile: time_weighted,
        moments,
        event_weighted_profile: event_weighted,
        event_weighted_moments,
        sim_time: pooled.iter().map(|b| b.time).sum(),
    })
}
