//! One-point, two-point and projective chains driven by shared shear pairs,
//! plus the numerical certificates built on top of them.

mod drift;
mod lyapunov;
mod rank;
mod steer;

pub use drift::{
    default_r0, drift_potential, drift_ratio, drift_sweep, DriftEstimate, DriftGrid, DriftParams,
    DriftRow, DriftSweep,
};
pub use lyapunov::{finite_time_exponent, lyapunov_exponent, LyapunovEstimate};
pub use rank::{
    furstenberg_check, jacobian_wrt_schedule, ChainKind, ChainState, RankReport, DEFAULT_FD_STEP,
    RANK_TOLERANCE,
};
pub use steer::{
    in_target, numerically_independent, steer_projective, steer_two_point, ProjectiveTarget,
    TwoPointSteering, STEER_BUDGET,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::flow::{apply_step, jacobian_step, ShearStep, TorusPoint};

/// Separation below which two points of a pair are treated as collided.
pub const COLLISION_TOL: f64 = 1e-15;

/// An ordered pair of distinct points driven by the same noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPointState {
    x: TorusPoint,
    y: TorusPoint,
}

impl TwoPointState {
    pub fn new(x: TorusPoint, y: TorusPoint) -> Result<Self> {
        let d = x.dist(&y);
        if d == 0.0 {
            return Err(Error::Degenerate(d));
        }
        Ok(TwoPointState { x, y })
    }

    pub fn x(&self) -> TorusPoint {
        self.x
    }

    pub fn y(&self) -> TorusPoint {
        self.y
    }

    pub fn separation(&self) -> f64 {
        self.x.dist(&self.y)
    }

    /// Euclidean distance on `T^2 x T^2`.
    pub fn dist(&self, other: &TwoPointState) -> f64 {
        self.x.dist(&other.x).hypot(self.y.dist(&other.y))
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x.x1(), self.x.x2(), self.y.x1(), self.y.x2()]
    }
}

/// Advance both coordinates by the same pair of steps.
pub fn step_two_point(s: TwoPointState, pair: (ShearStep, ShearStep)) -> Result<TwoPointState> {
    let x = apply_step(apply_step(s.x, pair.0), pair.1);
    let y = apply_step(apply_step(s.y, pair.0), pair.1);
    let d = x.dist(&y);
    if d < COLLISION_TOL {
        return Err(Error::Degenerate(d));
    }
    Ok(TwoPointState { x, y })
}

/// A point together with a unit tangent direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectiveState {
    x: TorusPoint,
    v: [f64; 2],
}

impl ProjectiveState {
    /// Normalizes `v`; rejects zero or non-finite directions.
    pub fn new(x: TorusPoint, v: [f64; 2]) -> Result<Self> {
        let n = v[0].hypot(v[1]);
        if !(n.is_finite() && n > 0.0) {
            return Err(invalid("projective direction must be a nonzero finite vector"));
        }
        Ok(ProjectiveState {
            x,
            v: [v[0] / n, v[1] / n],
        })
    }

    /// Direction at angle `theta` from the positive `x1` axis.
    pub fn from_angle(x: TorusPoint, theta: f64) -> Self {
        ProjectiveState {
            x,
            v: [theta.cos(), theta.sin()],
        }
    }

    pub fn x(&self) -> TorusPoint {
        self.x
    }

    pub fn v(&self) -> [f64; 2] {
        self.v
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x.x1(), self.x.x2(), self.v[0], self.v[1]]
    }
}

pub fn step_projective(s: ProjectiveState, pair: (ShearStep, ShearStep)) -> ProjectiveState {
    let j1 = jacobian_step(s.x, pair.0);
    let mid = apply_step(s.x, pair.0);
    let j2 = jacobian_step(mid, pair.1);
    let w = j2.mul(&j1).apply(s.v);
    let n = w[0].hypot(w[1]);
    ProjectiveState {
        x: apply_step(mid, pair.1),
        v: [w[0] / n, w[1] / n],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{flow, Schedule, FIXED_SET};
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn pair(h: f64, v: f64) -> (ShearStep, ShearStep) {
        (ShearStep::horizontal(h).unwrap(), ShearStep::vertical(v).unwrap())
    }

    #[test]
    fn two_point_rejects_diagonal() {
        let p = TorusPoint::new(1.0, 2.0);
        assert!(TwoPointState::new(p, p).is_err());
    }

    #[test]
    fn fixed_pair_is_unchanged() {
        let s = TwoPointState::new(FIXED_SET[0], FIXED_SET[3]).unwrap();
        let t = step_two_point(s, pair(3.3, 1.7)).unwrap();
        assert_eq!(t, s);
    }

    #[test]
    fn two_point_example() {
        // oracle: evaluate the two shears by hand for each coordinate
        // x = (pi/2, pi/2): H pi -> (3pi/2, pi/2); V pi -> (3pi/2, pi/2 + pi sin(3pi/2)) = (3pi/2, -pi/2)
        // y = (3pi/2, pi/2): H pi -> (5pi/2, pi/2) = (pi/2, pi/2); V pi -> (pi/2, 3pi/2)
        let s = TwoPointState::new(
            TorusPoint::new(FRAC_PI_2, FRAC_PI_2),
            TorusPoint::new(1.5 * PI, FRAC_PI_2),
        )
        .unwrap();
        let t = step_two_point(s, pair(PI, PI)).unwrap();
        assert!(t.x().dist(&TorusPoint::new(1.5 * PI, 1.5 * PI)) < 1e-13);
        assert!(t.y().dist(&TorusPoint::new(FRAC_PI_2, 1.5 * PI)) < 1e-13);
    }

    #[test]
    fn reflection_commutes() {
        let refl = |p: TorusPoint| TorusPoint::new(TAU - p.x1(), TAU - p.x2());
        let s = TwoPointState::new(TorusPoint::new(0.4, 2.2), TorusPoint::new(5.0, 1.1)).unwrap();
        let r = TwoPointState::new(refl(s.x()), refl(s.y())).unwrap();
        let a = step_two_point(s, pair(2.7, 4.1)).unwrap();
        let b = step_two_point(r, pair(2.7, 4.1)).unwrap();
        assert!(refl(a.x()).dist(&b.x()) < 1e-12);
        assert!(refl(a.y()).dist(&b.y()) < 1e-12);
    }

    #[test]
    fn projective_zero_pair_and_norm() {
        let s = ProjectiveState::new(TorusPoint::new(1.0, 2.0), [3.0, 4.0]).unwrap();
        assert_eq!(step_projective(s, pair(0.0, 0.0)), s);
        let t = step_projective(s, pair(5.0, 7.0));
        assert!((t.v()[0].hypot(t.v()[1]) - 1.0).abs() < 1e-12);
        let sched = Schedule::from_magnitudes(&[5.0, 7.0]).unwrap();
        assert_eq!(t.x(), flow(s.x(), &sched));
    }

    #[test]
    fn projective_example() {
        // oracle: analytic step Jacobians along the trajectory
        // at (pi/2, pi/2), H pi has Jacobian [[1, pi cos(pi/2)], [0, 1]] = I,
        // then at (3pi/2, pi/2), V pi has Jacobian [[1, 0], [pi cos(3pi/2), 1]] = I.
        let s = ProjectiveState::new(TorusPoint::new(FRAC_PI_2, FRAC_PI_2), [0.0, 1.0]).unwrap();
        let t = step_projective(s, pair(PI, PI));
        assert!(t.x().dist(&TorusPoint::new(1.5 * PI, 1.5 * PI)) < 1e-13);
        assert!(t.v()[0].abs() < 1e-12 && (t.v()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projective_sign_equivariance() {
        let s = ProjectiveState::from_angle(TorusPoint::new(0.9, 4.4), 0.3);
        let m = ProjectiveState::new(s.x(), [-s.v()[0], -s.v()[1]]).unwrap();
        let a = step_projective(s, pair(3.1, 0.8));
        let b = step_projective(m, pair(3.1, 0.8));
        assert_eq!(a.x(), b.x());
        assert!((a.v()[0] + b.v()[0]).abs() < 1e-14 && (a.v()[1] + b.v()[1]).abs() < 1e-14);
    }
}
