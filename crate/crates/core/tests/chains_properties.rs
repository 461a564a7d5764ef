//! Properties of the two-point, projective and Lyapunov chains and of the
//! drift potential.

use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use rand::Rng;
use shearmix::chains::{
    default_r0, drift_potential, finite_time_exponent, jacobian_wrt_schedule, lyapunov_exponent, step_projective,
    step_two_point, ChainState, ProjectiveState, TwoPointState, DEFAULT_FD_STEP,
};
use shearmix::stats::Accumulator;
use shearmix::{apply_step, flow, seed, tangent_flow, wrap, Schedule, ShearStep, TorusPoint};
use std::f64::consts::TAU;

fn config(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(0xc4a1),
        failure_persistence: None,
        ..Config::default()
    }
}

fn point() -> impl Strategy<Value = TorusPoint> {
    (0.0..TAU, 0.0..TAU).prop_map(|(a, b)| TorusPoint::new(a, b))
}

fn pair(t_max: f64) -> impl Strategy<Value = (ShearStep, ShearStep)> {
    (0.0..t_max, 0.0..t_max).prop_map(|(a, b)| (ShearStep::horizontal(a).unwrap(), ShearStep::vertical(b).unwrap()))
}

proptest! {
    #![proptest_config(config(256))]

    /// Both points of a pair see the same magnitudes.
    #[test]
    fn two_point_shares_noise(x in point(), y in point(), steps in pair(50.0)) {
        prop_assume!(x.dist(&y) > 1e-9);
        let s = TwoPointState::new(x, y).unwrap();
        let next = step_two_point(s, steps).unwrap();
        let one = |p| apply_step(apply_step(p, steps.0), steps.1);
        prop_assert_eq!(next.x(), one(x));
        prop_assert_eq!(next.y(), one(y));
    }

    #[test]
    fn coincident_points_are_rejected(x in point()) {
        prop_assert!(TwoPointState::new(x, x).is_err());
    }

    /// The projective chain acts on lines: flipping the direction flips the image.
    #[test]
    fn projective_step_is_sign_equivariant(x in point(), th in 0.0..TAU, steps in pair(50.0)) {
        let a = step_projective(ProjectiveState::from_angle(x, th), steps);
        let b = step_projective(ProjectiveState::new(x, [-th.cos(), -th.sin()]).unwrap(), steps);
        prop_assert_eq!(a.x(), b.x());
        prop_assert!((a.v()[0] + b.v()[0]).abs() <= 1e-15 && (a.v()[1] + b.v()[1]).abs() <= 1e-15);
        prop_assert!((a.v()[0].hypot(a.v()[1]) - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn projective_step_follows_tangent_flow(x in point(), th in 0.0..TAU, t1 in 0.0..50.0f64, t2 in 0.0..50.0f64) {
        let steps = (ShearStep::horizontal(t1).unwrap(), ShearStep::vertical(t2).unwrap());
        let s = step_projective(ProjectiveState::from_angle(x, th), steps);
        let sched = Schedule::from_pairs(&[(t1, t2)]).unwrap();
        let (q, m) = tangent_flow(x, &sched);
        let w = m.apply([th.cos(), th.sin()]);
        let n = w[0].hypot(w[1]);
        prop_assert_eq!(s.x(), q);
        prop_assert!((s.v()[0] - w[0] / n).abs() <= 1e-14 && (s.v()[1] - w[1] / n).abs() <= 1e-14);
        prop_assert_eq!(q, flow(x, &sched));
    }

    /// Halving the difference step moves no entry of the schedule derivative
    /// by more than the refinement tolerance.
    #[test]
    fn schedule_derivative_is_step_stable(x in point(), taus in prop::collection::vec(0.0..5.0f64, 4)) {
        let chain = ChainState::OnePoint(x);
        let coarse = jacobian_wrt_schedule(chain, &taus, DEFAULT_FD_STEP);
        let fine = jacobian_wrt_schedule(chain, &taus, DEFAULT_FD_STEP / 2.0);
        prop_assume!(coarse.is_ok() && fine.is_ok());
        let (a, b) = (coarse.unwrap().to_dmatrix(), fine.unwrap().to_dmatrix());
        prop_assert!((a - b).amax() <= 1e-3);
    }

    #[test]
    fn zero_schedule_has_zero_exponent(x in point(), th in 0.0..TAU, n in 1usize..50) {
        let sched = Schedule::from_magnitudes(&vec![0.0; 2 * n]).unwrap();
        prop_assert_eq!(finite_time_exponent(x, [th.cos(), th.sin()], &sched), 0.0);
    }
}

proptest! {
    #![proptest_config(config(4))]

    /// Doubling the sample count with an independent seed keeps the
    /// exponent within 3 combined standard errors.
    #[test]
    fn lyapunov_estimate_is_sample_stable(s: u64) {
        let a = lyapunov_exponent(20.0, 200, 200, seed::derive(s, 0)).unwrap();
        let b = lyapunov_exponent(20.0, 200, 400, seed::derive(s, 1)).unwrap();
        let se = a.std_error.hypot(b.std_error);
        prop_assert!((a.lambda1_hat - b.lambda1_hat).abs() <= 3.0 * se,
            "{} vs {} (se {se})", a.lambda1_hat, b.lambda1_hat);
        prop_assert!(a.lambda1_hat > 0.0);
    }
}

/// `x < 0 < y` within `r0` of the fixed point at the origin, at `alpha = 1/20`
/// and `T = 5e5`: conditioned on both magnitudes being at least 2, the mean
/// potential ratio stays below `2^(-alpha)`.
#[test]
fn drift_contracts_off_diagonal_quadrant_given_large_magnitudes() {
    let alpha = 1.0 / 20.0;
    let t_max = 5e5;
    let r0 = default_r0(t_max);
    let bound = 2f64.powf(-alpha);
    let n_mc = 20_000;
    let mut rng = seed::stream_rng(0xd21f, 0);
    for case in 0..24 {
        let x = TorusPoint::new(wrap(-r0 * rng.random::<f64>()), wrap(r0 * rng.random::<f64>()));
        let v0 = drift_potential(&x, alpha);
        let mut acc = Accumulator::default();
        for _ in 0..n_mc {
            let t1 = 2.0 + (t_max - 2.0) * rng.random::<f64>();
            let t2 = 2.0 + (t_max - 2.0) * rng.random::<f64>();
            let img = apply_step(apply_step(x, ShearStep::horizontal(t1).unwrap()), ShearStep::vertical(t2).unwrap());
            acc.push(drift_potential(&img, alpha) / v0);
        }
        assert!(
            acc.mean() <= bound + 3.0 * acc.std_error(),
            "case {case} at ({:e}, {:e}): ratio {} above {bound}",
            x.x1(),
            x.x2(),
            acc.mean()
        );
    }
}
