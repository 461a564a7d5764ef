//! Explicit steering schedules showing that target sets are reachable.
//!
//! Projective chain: three stages reach `((pi/2, pi/2), (0, 1))` from any
//! unit tangent vector off the fixed set:
//!
//! * `E1 = {x1 = pi/2}`: one horizontal step with `tau1 = (5pi/2 - x1) / sin x2`.
//! * `E2 = {x1 = 3pi/2, v != (+-1, 0)}`.
//! * `E3 = {((pi/2, pi/2), (0, 1))}`.
//!
//! Two-point chain: rotation-density stages, realized by enumerating the
//! winding number of a single long shear rather than scanning a `tau` grid.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use super::{step_projective, step_two_point, ProjectiveState, TwoPointState};
use crate::error::{invalid, Error, Result};
use crate::flow::{wrap, wrap_signed, Schedule, ShearStep, TorusPoint};

/// Membership tolerance for the exact target sets.
const SET_TOL: f64 = 1e-12;
/// Default evaluation budget for two-point steering.
pub const STEER_BUDGET: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProjectiveTarget {
    E1,
    E2,
    E3,
}

fn on_circle(a: f64, target: f64) -> bool {
    wrap_signed(a - target).abs() <= SET_TOL
}

pub fn in_target(s: &ProjectiveState, target: ProjectiveTarget) -> bool {
    match target {
        ProjectiveTarget::E1 => on_circle(s.x().x1(), FRAC_PI_2),
        ProjectiveTarget::E2 => on_circle(s.x().x1(), 1.5 * PI) && s.v()[1].abs() > SET_TOL,
        ProjectiveTarget::E3 => {
            on_circle(s.x().x1(), FRAC_PI_2)
                && on_circle(s.x().x2(), FRAC_PI_2)
                && s.v()[0].abs() <= 1e-9
                && s.v()[1] > 0.0
        }
    }
}

fn pair_steps(h: f64, v: f64) -> Result<(ShearStep, ShearStep)> {
    Ok((ShearStep::horizontal(h)?, ShearStep::vertical(v)?))
}

/// Apply the pairs and return the new state.
fn advance(s: ProjectiveState, pairs: &[(f64, f64)]) -> Result<ProjectiveState> {
    let mut cur = s;
    for &(h, v) in pairs {
        cur = step_projective(cur, pair_steps(h, v)?);
    }
    Ok(cur)
}

/// Claim (a): one horizontal step onto `x1 = pi/2`.
fn stage_e1(s: &ProjectiveState) -> Result<Vec<(f64, f64)>> {
    if in_target(s, ProjectiveTarget::E1) {
        return Ok(Vec::new());
    }
    let (x, y) = (s.x().x1(), s.x().x2());
    let sy = y.sin();
    if sy.abs() <= SET_TOL {
        return Err(Error::NeedsPerturbation(format!(
            "sin(x2) = 0 at {:?}; apply (0, tau) with small tau > 0 first",
            (x, y)
        )));
    }
    let tau = if sy > 0.0 {
        (2.5 * PI - x) / sy
    } else {
        (x + 1.5 * PI) / -sy
    };
    Ok(vec![(tau, 0.0)])
}

/// Claim (b): from `x1 = pi/2` to `x1 = 3pi/2` with a non-horizontal direction.
fn stage_e2(s: &ProjectiveState) -> Vec<(f64, f64)> {
    let y = s.x().x2();
    if s.v()[1].abs() > SET_TOL {
        // identity Jacobians along the way: v is carried unchanged
        vec![(0.0, wrap(2.5 * PI - y)), (PI, 0.0)]
    } else {
        // Horizontal vectors are invariant under horizontal shears and under
        // vertical shears at x1 = pi/2, 3pi/2; rotate at x1 = pi instead.
        // y -> pi/4; x1 -> pi; v -> (1, -1) up to scale; x1 -> 3pi/2.
        let half = PI * 2f64.sqrt() / 2.0;
        vec![(0.0, wrap(2.25 * PI - y)), (half, 1.0), (half, 0.0)]
    }
}

/// Turn a state of `E2` with `v2 < 0` into one with `v2 > 0`, staying in `E2`.
fn flip_to_upper(s: &ProjectiveState) -> Result<Vec<(f64, f64)>> {
    let y = s.x().x2();
    // y -> pi (vertical step at x1 = 3pi/2 has identity Jacobian)
    let a = (0.0, wrap(y - PI));
    let s1 = advance(*s, &[a])?;
    let [v1, v2] = s1.v();
    // horizontal step at x2 = pi leaves x1 fixed and adds tau |v2| to v1
    let t3 = (1.0 - v1 / v2.abs()).max(0.0);
    let b = (t3, 0.0);
    let s2 = advance(s1, &[b])?;
    // x2 -> pi/2, then x1 -> 0 where the vertical Jacobian is [[1, 0], [tau, 1]]
    let c = (0.0, FRAC_PI_2);
    let s3 = advance(s2, &[c, (FRAC_PI_2, 0.0)])?;
    let [w1, w2] = s3.v();
    let d = (FRAC_PI_2, 2.0 * w2.abs() / w1);
    Ok(vec![a, b, c, d, (1.5 * PI, 0.0)])
}

/// Claim (c): from `E2` (with `v2 > 0`) onto `((pi/2, pi/2), (0, 1))`.
///
/// The vertical Jacobian at the float nearest `3pi/2` is not exactly the
/// identity, so `z` is re-solved a few times against the simulated state.
fn stage_e3(s: &ProjectiveState) -> Result<Vec<(f64, f64)>> {
    let y = s.x().x2();
    let [v1, v2] = s.v();
    let mut r = v1 / v2;
    let mut tau2 = 0.0;
    let mut mid = *s;
    for _ in 0..4 {
        // tau3 sin z = pi and tau3 cos z = v1 / v2
        let z = PI.atan2(r);
        // vertical step at x1 = 3pi/2 moves x2 to z + pi
        tau2 = wrap(y - z - PI);
        mid = advance(*s, &[(0.0, tau2)])?;
        r = mid.v()[0] / mid.v()[1];
    }
    // then x1 -> pi/2, v -> (0, v2), and x2 from z + pi to pi/2
    let tau3 = PI.hypot(r);
    let tau4 = wrap(FRAC_PI_2 - mid.x().x2());
    Ok(vec![(0.0, tau2), (tau3, tau4)])
}

/// Explicit schedule steering `start` into `target`. Targets are chained:
/// `E2` first reaches `E1`, and `E3` first reaches `E2`.
pub fn steer_projective(start: ProjectiveState, target: ProjectiveTarget) -> Result<Schedule> {
    if crate::flow::is_fixed_point(&start.x()) {
        return Err(Error::OnFixedSet((start.x().x1(), start.x().x2())));
    }
    if in_target(&start, target) {
        return Ok(Schedule::empty());
    }
    let mut pairs = stage_e1(&start)?;
    let mut cur = advance(start, &pairs)?;
    if target == ProjectiveTarget::E1 {
        return Schedule::from_pairs(&pairs);
    }
    if !in_target(&cur, ProjectiveTarget::E2) {
        let b = stage_e2(&cur);
        cur = advance(cur, &b)?;
        pairs.extend(b);
    }
    if target == ProjectiveTarget::E2 {
        return Schedule::from_pairs(&pairs);
    }
    if cur.v()[1] < 0.0 {
        let f = flip_to_upper(&cur)?;
        cur = advance(cur, &f)?;
        pairs.extend(f);
    }
    let c = stage_e3(&cur)?;
    pairs.extend(c);
    Schedule::from_pairs(&pairs)
}

/// Whether `a` and `b` are nonzero with a ratio that is not a rational of
/// small height, up to round-off. Rational dependence cannot be decided in
/// floating point; small denominators are the ones that trap a finite scan.
pub fn numerically_independent(a: f64, b: f64) -> bool {
    const EPS: f64 = 1e-9;
    if a.abs() <= EPS || b.abs() <= EPS {
        return false;
    }
    let r = a / b;
    (1..=16).all(|q| {
        let qf = q as f64;
        (qf * r - (qf * r).round()).abs() > EPS * qf
    })
}

/// The shears commute with `x -> -x`, `x -> (x1 + pi, pi - x2)` and their
/// composite, so pairs `(x, g x)` stay on the graph of `g` forever.
fn symmetric_partner(x: &TorusPoint, y: &TorusPoint) -> Option<&'static str> {
    let images = [
        ("x -> -x", TorusPoint::new(-x.x1(), -x.x2())),
        ("x -> (x1 + pi, pi - x2)", TorusPoint::new(x.x1() + PI, PI - x.x2())),
        ("x -> (pi - x1, x2 + pi)", TorusPoint::new(PI - x.x1(), x.x2() + PI)),
    ];
    images
        .into_iter()
        .find(|(_, g)| g.dist(y) <= SET_TOL)
        .map(|(name, _)| name)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoPointSteering {
    pub schedule: Schedule,
    /// Candidate magnitudes tried across all stages.
    pub evaluations: u64,
    /// Whether a perturbation stage was needed to break a rational relation.
    pub perturbed: bool,
    pub final_distance: f64,
}

/// Low-discrepancy small magnitudes for perturbation attempts.
fn perturbation_pairs(delta: f64, k: usize) -> [(f64, f64); 3] {
    const G1: f64 = 0.754_877_666_246_692_7;
    const G2: f64 = 0.569_840_290_998_053_3;
    let u = (0.5 + G1 * (k + 1) as f64).fract();
    let w = (0.5 + G2 * (k + 1) as f64).fract();
    let (a, b) = (delta * (0.1 + 0.9 * u), delta * (0.1 + 0.9 * w));
    [(a, b), (0.0, b), (a, 0.0)]
}

struct Steering {
    state: TwoPointState,
    pairs: Vec<(f64, f64)>,
    evaluations: u64,
    budget: u64,
    perturbed: bool,
}

impl Steering {
    fn push(&mut self, h: f64, v: f64) -> Result<()> {
        self.state = step_two_point(self.state, pair_steps(h, v)?)?;
        self.pairs.push((h, v));
        Ok(())
    }

    fn spend(&mut self, n: u64) -> Result<()> {
        self.evaluations += n;
        if self.evaluations > self.budget {
            Err(Error::SearchBudgetExceeded {
                evaluations: self.evaluations,
            })
        } else {
            Ok(())
        }
    }

    /// Ensure the coefficients of the next shear direction are independent,
    /// trying small perturbation pairs of size at most `delta`.
    fn make_independent(&mut self, coeffs: fn(&TwoPointState) -> (f64, f64), delta: f64) -> Result<()> {
        let (a, b) = coeffs(&self.state);
        if numerically_independent(a, b) {
            return Ok(());
        }
        for k in 0..64 {
            for (h, v) in perturbation_pairs(delta, k) {
                self.spend(1)?;
                let Ok(next) = step_two_point(self.state, pair_steps(h, v)?) else {
                    continue;
                };
                let (a, b) = coeffs(&next);
                if numerically_independent(a, b) {
                    self.push(h, v)?;
                    self.perturbed = true;
                    return Ok(());
                }
            }
        }
        Err(Error::NeedsPerturbation(
            "no small perturbation broke the rational relation".into(),
        ))
    }

    /// Single shear in `dir` landing the first point's moving coordinate
    /// exactly on `goal_x` and the second's within `tol` of `goal_y`.
    /// Returns the achieved error of the second coordinate.
    fn rotate(&mut self, horizontal: bool, goal_x: f64, goal_y: f64, tol: f64) -> Result<f64> {
        let (x, y) = (self.state.x(), self.state.y());
        let (cx, cy, px, py) = if horizontal {
            (x.x2().sin(), y.x2().sin(), x.x1(), y.x1())
        } else {
            (x.x1().sin(), y.x1().sin(), x.x2(), y.x2())
        };
        let d = wrap(cx.signum() * (goal_x - px));
        let mut k = 0u64;
        loop {
            self.spend(1)?;
            let tau = (d + TAU * k as f64) / cx.abs();
            let err = wrap_signed(py + tau * cy - goal_y).abs();
            if err < tol {
                if horizontal {
                    self.push(tau, 0.0)?;
                } else {
                    self.push(0.0, tau)?;
                }
                return Ok(err);
            }
            k += 1;
        }
    }
}

/// Find a schedule taking `start` into the ball of `radius` around `target`
/// (Euclidean metric on `T^2 x T^2`).
///
/// Stages: break rational relations between `sin x2, sin y2`; one horizontal
/// shear fixing the first coordinates; break relations between
/// `sin x1, sin y1` with perturbations of size `radius / 24`; one vertical
/// shear fixing the second coordinates.
pub fn steer_two_point(
    start: TwoPointState,
    target: TwoPointState,
    radius: f64,
    budget: u64,
) -> Result<TwoPointSteering> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid("target radius must be positive"));
    }
    for p in [start.x(), start.y()] {
        if crate::flow::is_fixed_point(&p) {
            return Err(Error::OnFixedSet((p.x1(), p.x2())));
        }
    }
    if start.dist(&target) < radius {
        return Ok(TwoPointSteering {
            schedule: Schedule::empty(),
            evaluations: 0,
            perturbed: false,
            final_distance: start.dist(&target),
        });
    }
    if let Some(g) = symmetric_partner(&start.x(), &start.y()) {
        return Err(Error::NeedsPerturbation(format!(
            "pair lies on the invariant graph of {g}; no shear schedule leaves it"
        )));
    }
    let mut st = Steering {
        state: start,
        pairs: Vec::new(),
        evaluations: 0,
        budget,
        perturbed: false,
    };
    let (w, z) = (target.x(), target.y());

    st.make_independent(|s| (s.x().x2().sin(), s.y().x2().sin()), 0.5)?;
    let e1 = st.rotate(true, w.x1(), z.x1(), radius / 3.0)?;

    let delta = radius / 24.0;
    st.make_independent(|s| (s.x().x1().sin(), s.y().x1().sin()), delta)?;
    let ex1 = wrap_signed(st.state.x().x1() - w.x1()).abs();
    let ey1 = wrap_signed(st.state.y().x1() - z.x1()).abs().max(e1);
    let slack = radius * radius - ex1 * ex1 - ey1 * ey1;
    if slack <= 0.0 {
        return Err(Error::SearchBudgetExceeded {
            evaluations: st.evaluations,
        });
    }
    st.rotate(false, w.x2(), z.x2(), 0.999 * slack.sqrt())?;

    let schedule = Schedule::from_pairs(&st.pairs)?;
    let final_distance = st.state.dist(&target);
    if final_distance >= radius {
        return Err(Error::SearchBudgetExceeded {
            evaluations: st.evaluations,
        });
    }
    Ok(TwoPointSteering {
        schedule,
        evaluations: st.evaluations,
        perturbed: st.perturbed,
        final_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use std::f64::consts::FRAC_PI_4;

    fn run(start: ProjectiveState, sched: &Schedule) -> ProjectiveState {
        sched.pairs().fold(start, step_projective)
    }

    #[test]
    fn e1_uses_the_explicit_formula() {
        let s = ProjectiveState::new(TorusPoint::new(0.0, FRAC_PI_2), [0.3, 0.7]).unwrap();
        let sched = steer_projective(s, ProjectiveTarget::E1).unwrap();
        assert_eq!(sched.magnitudes(), vec![2.5 * PI, 0.0]);
        assert!(in_target(&run(s, &sched), ProjectiveTarget::E1));
    }

    #[test]
    fn already_in_target_is_empty() {
        let s = ProjectiveState::new(TorusPoint::new(FRAC_PI_2, 1.0), [1.0, 0.0]).unwrap();
        assert!(steer_projective(s, ProjectiveTarget::E1).unwrap().is_empty());
    }

    #[test]
    fn degenerate_start_needs_perturbation() {
        let s = ProjectiveState::new(TorusPoint::new(1.0, PI), [1.0, 0.0]).unwrap();
        assert!(matches!(
            steer_projective(s, ProjectiveTarget::E1),
            Err(Error::NeedsPerturbation(_))
        ));
    }

    #[test]
    fn composed_steering_lands_on_e3() {
        let goal = TorusPoint::new(FRAC_PI_2, FRAC_PI_2);
        let mut rng = seed::stream_rng(3, 0);
        let mut starts = vec![
            ProjectiveState::new(TorusPoint::new(0.0, FRAC_PI_2), [1.0, 0.0]).unwrap(),
            ProjectiveState::new(TorusPoint::new(2.0, 4.0), [0.0, -1.0]).unwrap(),
            ProjectiveState::new(TorusPoint::new(5.0, 1.0), [-1.0, 0.0]).unwrap(),
            ProjectiveState::new(TorusPoint::new(FRAC_PI_4, 3.0), [0.6, -0.8]).unwrap(),
        ];
        for _ in 0..200 {
            let p = TorusPoint::random(&mut rng);
            let th = rand::Rng::random::<f64>(&mut rng) * TAU;
            starts.push(ProjectiveState::from_angle(p, th));
        }
        for s in starts {
            let sched = steer_projective(s, ProjectiveTarget::E3).unwrap();
            let end = run(s, &sched);
            assert!(end.x().dist(&goal) < 1e-9, "{s:?} -> {end:?}");
            assert!(end.v()[0].abs() < 1e-9 && (end.v()[1] - 1.0).abs() < 1e-9, "{s:?} -> {end:?}");
            // intermediate targets are hit too
            let e2 = steer_projective(s, ProjectiveTarget::E2).unwrap();
            assert!(in_target(&run(s, &e2), ProjectiveTarget::E2));
            // magnitude bound via the substitution identity
            let bounded = sched.split_to_bound(4.0).unwrap();
            assert!(bounded.max_tau() <= 4.0);
            assert!(run(s, &bounded).x().dist(&goal) < 1e-9);
        }
    }

    #[test]
    fn independence_predicate() {
        assert!(!numerically_independent(0.5, 0.5));
        assert!(!numerically_independent(0.5, -0.25));
        assert!(!numerically_independent(0.3, 0.0));
        assert!(numerically_independent(1.0, 2f64.sqrt()));
    }

    #[test]
    fn two_point_trivial_target() {
        let s = TwoPointState::new(TorusPoint::new(1.0, 2.0), TorusPoint::new(3.0, 4.0)).unwrap();
        let out = steer_two_point(s, s, 1e-3, STEER_BUDGET).unwrap();
        assert!(out.schedule.is_empty());
    }

    #[test]
    fn two_point_dependent_start_is_perturbed() {
        // sin(x2) = sin(y2): the same second coordinate
        let s = TwoPointState::new(TorusPoint::new(1.0, 0.7), TorusPoint::new(2.0, 0.7)).unwrap();
        let t = TwoPointState::new(TorusPoint::new(4.0, 5.0), TorusPoint::new(0.5, 2.5)).unwrap();
        let out = steer_two_point(s, t, 1e-2, STEER_BUDGET).unwrap();
        assert!(out.perturbed);
        let end = out
            .schedule
            .pairs()
            .try_fold(s, step_two_point)
            .unwrap();
        assert!(end.dist(&t) < 1e-2);
    }

    #[test]
    fn symmetric_pairs_are_unsteerable() {
        let x = TorusPoint::new(1.0, 2.0);
        let s = TwoPointState::new(x, TorusPoint::new(-1.0, -2.0)).unwrap();
        let t = TwoPointState::new(TorusPoint::new(4.0, 5.0), TorusPoint::new(0.5, 2.5)).unwrap();
        assert!(matches!(
            steer_two_point(s, t, 1e-2, STEER_BUDGET),
            Err(Error::NeedsPerturbation(_))
        ));
        // and the invariance itself
        let r = TwoPointState::new(x, TorusPoint::new(1.0 + PI, PI - 2.0)).unwrap();
        let after = step_two_point(r, pair_steps(2.3, 4.4).unwrap()).unwrap();
        let g = TorusPoint::new(after.x().x1() + PI, PI - after.x().x2());
        assert!(g.dist(&after.y()) < 1e-12);
    }

    #[test]
    fn tiny_budget_fails_loudly() {
        let s = TwoPointState::new(TorusPoint::new(1.0, 0.3), TorusPoint::new(2.0, 1.9)).unwrap();
        let t = TwoPointState::new(TorusPoint::new(4.0, 5.0), TorusPoint::new(0.5, 2.5)).unwrap();
        assert!(matches!(
            steer_two_point(s, t, 1e-4, 10),
            Err(Error::SearchBudgetExceeded { .. })
        ));
    }
}
