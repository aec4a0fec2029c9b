//! Statistical agreement of the simulator with the exact engines. Every run
//! uses 10⁷ events and a fixed seed.

use nesslab::closedform::prescribed;
use nesslab::model::{coefficients, ReservoirKind};
use nesslab::simulate::{run, SimulationControls, SimulationEstimate};
use nesslab::tolerances::SIGMA_BAND;
use nesslab::verify::{closed_form_matrix, compare_statistical};
use nesslab::{profile_closed_form, solve_two_point, ModelParams, RedistributionLaw, ReservoirLaw};

const EVENTS: u64 = 10_000_000;

fn simulate(p: &ModelParams, kind: ReservoirKind, seed: u64) -> SimulationEstimate {
    let nu = RedistributionLaw::uniform();
    let left = ReservoirLaw::new(kind, p.t_left, p.l2).unwrap();
    let right = ReservoirLaw::new(kind, p.t_right, p.r2).unwrap();
    run(p, &nu, &left, &right, &SimulationControls::new(EVENTS, seed)).unwrap()
}

fn z(mean: f64, se: f64, truth: f64) -> f64 {
    (mean - truth).abs() / se
}

#[test]
fn equilibrium_profile_and_diagonal() {
    let (t, lambda, alpha) = (1.5, 0.3, 1.0 / 6.0);
    let p = prescribed(&ModelParams::new(4, lambda, t, t, 0.0, 0.0), alpha).unwrap();
    let est = simulate(&p, ReservoirKind::TwoAtom, 101);
    let g = coefficients(alpha, lambda).unwrap();
    let diagonal = g.b_coef * t * t / (1.0 - 2.0 * g.a_coef);
    for i in 1..=4 {
        let e = est.profile_at(i);
        assert!(z(e.mean, e.std_error, t) <= SIGMA_BAND, "E({i}) = {e:?}");
        let m = est.moment(i, i);
        assert!(
            z(m.mean, m.std_error, diagonal) <= SIGMA_BAND,
            "mu_{i}{i} = {m:?} vs {diagonal}"
        );
    }
}

#[test]
fn kmp_regime_neighbour_correlation() {
    let alpha = 1.0 / 6.0;
    let p = prescribed(&ModelParams::new(4, 0.0, 1.0, 2.0, 0.0, 0.0), alpha).unwrap();
    let est = simulate(&p, ReservoirKind::TwoAtom, 102);
    let closed = closed_form_matrix(&p, alpha).unwrap();
    // E(1)E(2) is exact, so testing μ_12 tests C_N(1,2) = 1/50 with the same error bar.
    let m = est.moment(1, 2);
    let c_est = m.mean - closed.profile.at(1) * closed.profile.at(2);
    assert!((closed.get(1, 2) - closed.profile.at(1) * closed.profile.at(2) - 1.0 / 50.0).abs() < 1e-12);
    assert!(
        z(m.mean, m.std_error, closed.get(1, 2)) <= SIGMA_BAND,
        "C(1,2) estimate {c_est} ± {} vs 1/50",
        m.std_error
    );
}

#[test]
fn deterministic_reservoirs_follow_the_solver_not_the_ansatz() {
    let alpha = 1.0 / 6.0;
    let p = ModelParams::new(4, 0.3, 1.0, 2.0, 1.0, 4.0);
    let est = simulate(&p, ReservoirKind::Deterministic, 103);

    let exact = solve_two_point(&p, alpha).unwrap();
    let cmp = compare_statistical(&est, &exact, SIGMA_BAND).unwrap();
    assert!(cmp.passed, "worst {:?}", cmp.worst);

    let ansatz = closed_form_matrix(&prescribed(&p, alpha).unwrap(), alpha).unwrap();
    let cmp = compare_statistical(&est, &ansatz, SIGMA_BAND).unwrap();
    assert!(!cmp.passed, "worst {:?}", cmp.worst);
}

#[test]
fn profile_converges_at_n8() {
    let p = prescribed(&ModelParams::new(8, 0.5, 0.5, 3.0, 0.0, 0.0), 1.0 / 6.0).unwrap();
    let est = simulate(&p, ReservoirKind::Gamma, 104);
    let exact = profile_closed_form(&p).unwrap();
    for i in 1..=8 {
        let e = est.profile_at(i);
        assert!(
            z(e.mean, e.std_error, exact.at(i)) <= SIGMA_BAND,
            "E({i}) = {e:?} vs {}",
            exact.at(i)
        );
    }
}
