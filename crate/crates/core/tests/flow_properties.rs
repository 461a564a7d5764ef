//! Properties of the shear maps, their inverses and tangent flow.
//!
//! The fixed-threshold determinant and round-trip bounds over long schedules
//! are measured by the exactness acceptance criterion; here the same
//! quantities are held to rounding-error bounds that scale with the
//! conditioning of the product, which is what a correct implementation can
//! guarantee over the whole parameter range.

use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use shearmix::{
    apply_step, apply_step_inverse, flow, flow_inverse, jacobian_step, make_schedule, seed, step_grad_l1,
    tangent_flow, wrap_signed, Jacobian2, Provenance, Schedule, ShearStep, TorusPoint, FIXED_SET,
};
use std::f64::consts::{PI, TAU};

fn config(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..Config::default()
    }
}

fn point() -> impl Strategy<Value = TorusPoint> {
    (0.0..TAU, 0.0..TAU).prop_map(|(a, b)| TorusPoint::new(a, b))
}

fn schedule(max_pairs: usize, t_max: f64) -> impl Strategy<Value = Schedule> {
    (1..=max_pairs, any::<u64>())
        .prop_map(move |(n, s)| make_schedule(Provenance::RandomUniform { t_max, seed: s }, n).unwrap())
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn single_step_round_trip(p in point(), tau in 0.0..100.0f64, vertical: bool) {
        let s = if vertical { ShearStep::vertical(tau) } else { ShearStep::horizontal(tau) }.unwrap();
        prop_assert!(apply_step_inverse(apply_step(p, s), s).dist(&p) <= 1e-12);
        prop_assert!(apply_step(apply_step_inverse(p, s), s).dist(&p) <= 1e-12);
    }

    #[test]
    fn fixed_set_is_bitwise_fixed(sched in schedule(50, 1e6)) {
        for f in FIXED_SET {
            prop_assert_eq!(flow(f, &sched), f);
            prop_assert_eq!(flow_inverse(f, &sched), f);
            let (q, _) = tangent_flow(f, &sched);
            prop_assert_eq!(q, f);
        }
    }

    /// `flow_inverse(flow(p))` returns within the rounding of each step
    /// (`4 eps (2 pi + tau)`) propagated back through the prefix derivative.
    #[test]
    fn round_trip_within_conditioned_rounding(p in point(), sched in schedule(50, 10.0)) {
        let eps = f64::EPSILON;
        let mut q = p;
        let mut m = Jacobian2::IDENTITY;
        let mut bound = 0.0;
        for st in sched.steps() {
            let before = m.frobenius();
            m = jacobian_step(q, *st).mul(&m);
            q = apply_step(q, *st);
            bound += 4.0 * eps * (TAU + st.tau()) * (before + m.frobenius());
        }
        // beyond this the linearization behind the bound is meaningless
        prop_assume!(bound < 1e-3);
        let err = flow_inverse(flow(p, &sched), &sched).dist(&p);
        prop_assert!(err <= bound + 1e-15, "error {err:e} above bound {bound:e}");
    }

    /// `|det - 1|` grows only through the conditioning of the partial
    /// products: `sum_k 4 eps (1 + tau_k) |M_k|^2 + 2 eps |M_n|^2`.
    #[test]
    fn determinant_within_conditioned_rounding(p in point(), sched in schedule(500, 10.0)) {
        let eps = f64::EPSILON;
        let mut q = p;
        let mut m = Jacobian2::IDENTITY;
        let mut bound = 0.0;
        for st in sched.steps() {
            m = jacobian_step(q, *st).mul(&m);
            q = apply_step(q, *st);
            bound += 4.0 * eps * (1.0 + st.tau()) * m.frobenius().powi(2);
            if !m.frobenius().is_finite() {
                break;
            }
        }
        prop_assume!(m.frobenius().is_finite());
        bound += 2.0 * eps * m.frobenius().powi(2);
        let (_, tf) = tangent_flow(p, &sched);
        prop_assert!(((tf.det() - 1.0).abs()) <= bound, "|det - 1| {:e} above bound {bound:e}", (tf.det() - 1.0).abs());
    }

    #[test]
    fn determinant_of_short_products(p in point(), sched in schedule(2, 10.0)) {
        let (_, m) = tangent_flow(p, &sched);
        prop_assert!((m.det() - 1.0).abs() <= 1e-10);
    }

    /// Directional central differences of one pair against the tangent flow.
    #[test]
    fn tangent_matches_finite_differences(p in point(), sched in schedule(1, 10.0), th in 0.0..TAU) {
        let h = 1e-6;
        let v = [th.cos(), th.sin()];
        let (_, m) = tangent_flow(p, &sched);
        let a = flow(TorusPoint::new(p.x1() + h * v[0], p.x2() + h * v[1]), &sched);
        let b = flow(TorusPoint::new(p.x1() - h * v[0], p.x2() - h * v[1]), &sched);
        let fd = [wrap_signed(a.x1() - b.x1()) / (2.0 * h), wrap_signed(a.x2() - b.x2()) / (2.0 * h)];
        let an = m.apply(v);
        let rel = (fd[0] - an[0]).hypot(fd[1] - an[1]) / an[0].hypot(an[1]);
        prop_assert!(rel <= 1e-4, "relative error {rel:e}");
    }

    #[test]
    fn tangent_flow_point_is_flow(p in point(), sched in schedule(20, 20.0)) {
        prop_assert_eq!(tangent_flow(p, &sched).0, flow(p, &sched));
    }

    #[test]
    fn schedules_are_reproducible(n in 1usize..200, s: u64, t in 0.1..100.0f64) {
        let a = make_schedule(Provenance::RandomUniform { t_max: t, seed: s }, n).unwrap();
        let b = make_schedule(Provenance::RandomUniform { t_max: t, seed: s }, n).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.steps().len(), 2 * n);
        prop_assert!(a.magnitudes().iter().all(|&x| (0.0..=t).contains(&x)));
        prop_assert_eq!(Schedule::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn gradient_norm_is_linear(t in 0.0..1e3f64, k in 0.0..10.0f64) {
        let one = step_grad_l1(ShearStep::horizontal(t).unwrap());
        prop_assert!((one - 8.0 * PI * t).abs() <= 1e-12 * (1.0 + one));
        let scaled = step_grad_l1(ShearStep::vertical(k * t).unwrap());
        prop_assert!((scaled - k * one).abs() <= 1e-12 * (1.0 + scaled));
    }
}

proptest! {
    #![proptest_config(config(6))]

    /// The fraction of uniform points whose image lands in a rectangle equals
    /// its area fraction within 3 Monte Carlo standard errors.
    #[test]
    fn area_preservation(
        sched in schedule(5, 20.0),
        x0 in 0.0..TAU, y0 in 0.0..TAU, w in 0.3..TAU, h in 0.3..TAU, s: u64,
    ) {
        let n = 1_000_000;
        let inside = |q: TorusPoint| {
            let dx = (q.x1() - x0).rem_euclid(TAU);
            let dy = (q.x2() - y0).rem_euclid(TAU);
            dx < w && dy < h
        };
        let mut rng = seed::stream_rng(s, 0);
        let hits = (0..n).filter(|_| inside(flow(TorusPoint::random(&mut rng), &sched))).count();
        let frac = w * h / (TAU * TAU);
        let se = (frac * (1.0 - frac) / n as f64).sqrt();
        let got = hits as f64 / n as f64;
        prop_assert!((got - frac).abs() <= 3.0 * se, "{got} vs {frac} (se {se:e})");
    }
}

#[test]
fn random_magnitudes_have_uniform_mean() {
    let t = 20.0;
    let s = make_schedule(Provenance::RandomUniform { t_max: t, seed: 11 }, 50_000).unwrap();
    let taus = s.magnitudes();
    let mean = taus.iter().sum::<f64>() / taus.len() as f64;
    let se = t / 12f64.sqrt() / (taus.len() as f64).sqrt();
    assert!((mean - t / 2.0).abs() <= 3.0 * se);
}
