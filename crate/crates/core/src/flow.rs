//! Exact maps of the alternating sine shears on the flat torus `R^2 / (2 pi Z)^2`.
//!
//! Each time-one map has a closed form, so no ODE is integrated anywhere:
//!
//! * horizontal: `(x1, x2) -> (x1 + tau sin x2, x2)`
//! * vertical:   `(x1, x2) -> (x1, x2 + tau sin x1)`
//!
//! Coordinates are reduced into `[0, 2 pi)` after every step so the rounding
//! error stays bounded independently of the accumulated magnitude.

use std::f64::consts::{PI, TAU};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::seed;

/// Reduce an angle into `[0, 2 pi)`.
#[inline]
pub fn wrap(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2 pi for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed representative of an angle difference in `[-pi, pi)`.
#[inline]
pub fn wrap_signed(a: f64) -> f64 {
    wrap(a + PI) - PI
}

/// A point of the torus with both coordinates in `[0, 2 pi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64)", into = "(f64, f64)")]
pub struct TorusPoint {
    x1: f64,
    x2: f64,
}

impl From<(f64, f64)> for TorusPoint {
    fn from((x1, x2): (f64, f64)) -> Self {
        TorusPoint::new(x1, x2)
    }
}

impl From<TorusPoint> for (f64, f64) {
    fn from(p: TorusPoint) -> Self {
        (p.x1, p.x2)
    }
}

impl TorusPoint {
    pub fn new(x1: f64, x2: f64) -> Self {
        TorusPoint {
            x1: wrap(x1),
            x2: wrap(x2),
        }
    }

    #[inline]
    pub fn x1(&self) -> f64 {
        self.x1
    }

    #[inline]
    pub fn x2(&self) -> f64 {
        self.x2
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x1, self.x2]
    }

    /// Draw a point uniformly on the torus.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        TorusPoint::new(rng.random::<f64>() * TAU, rng.random::<f64>() * TAU)
    }

    /// Shortest displacement `q - self` over all lifts, components in `[-pi, pi)`.
    #[inline]
    pub fn displacement_to(&self, q: &TorusPoint) -> (f64, f64) {
        (wrap_signed(q.x1 - self.x1), wrap_signed(q.x2 - self.x2))
    }

    /// Flat-torus distance: the minimum Euclidean distance over the nine
    /// lattice shifts in `{-2 pi, 0, 2 pi}^2`.
    pub fn dist(&self, q: &TorusPoint) -> f64 {
        let d1 = q.x1 - self.x1;
        let d2 = q.x2 - self.x2;
        let mut best = f64::INFINITY;
        for s1 in [-TAU, 0.0, TAU] {
            for s2 in [-TAU, 0.0, TAU] {
                best = best.min((d1 + s1).hypot(d2 + s2));
            }
        }
        best
    }

    /// Sup-norm torus distance.
    pub fn dist_inf(&self, q: &TorusPoint) -> f64 {
        let (d1, d2) = self.displacement_to(q);
        d1.abs().max(d2.abs())
    }
}

/// The four points `{0, pi}^2`, fixed by every sine shear.
pub const FIXED_SET: [TorusPoint; 4] = [
    TorusPoint { x1: 0.0, x2: 0.0 },
    TorusPoint { x1: 0.0, x2: PI },
    TorusPoint { x1: PI, x2: 0.0 },
    TorusPoint { x1: PI, x2: PI },
];

/// Sup-norm distance from `p` to the nearest point of the fixed set.
pub fn dist_inf_to_fixed_set(p: &TorusPoint) -> f64 {
    FIXED_SET
        .iter()
        .map(|q| p.dist_inf(q))
        .fold(f64::INFINITY, f64::min)
}

pub fn is_fixed_point(p: &TorusPoint) -> bool {
    FIXED_SET.contains(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "H")]
    Horizontal,
    #[serde(rename = "V")]
    Vertical,
}

impl Direction {
    /// Direction of the `i`-th step (0-based): even indices are horizontal.
    pub fn of_index(i: usize) -> Self {
        if i.is_multiple_of(2) {
            Direction::Horizontal
        } else {
            Direction::Vertical
        }
    }
}

/// One application of a sine shear with magnitude `tau >= 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShearStep {
    #[serde(rename = "dir")]
    direction: Direction,
    tau: f64,
}

impl ShearStep {
    pub fn new(direction: Direction, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(invalid(format!("shear magnitude must be finite and >= 0, got {tau}")));
        }
        Ok(ShearStep { direction, tau })
    }

    pub fn horizontal(tau: f64) -> Result<Self> {
        Self::new(Direction::Horizontal, tau)
    }

    pub fn vertical(tau: f64) -> Result<Self> {
        Self::new(Direction::Vertical, tau)
    }

    #[inline]
    pub fn direction(&self) -> Direction {
        self.direction
    }

    #[inline]
    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// `sin` with an exact zero at the stored representative of `pi`, so the
/// fixed set stays bitwise fixed.
#[inline]
pub fn sin_torus(a: f64) -> f64 {
    if a == PI {
        0.0
    } else {
        a.sin()
    }
}

/// Lifted shear on `R^2`, accepting any real magnitude (negative values give
/// the inverse map). Commutes with the deck translations by `2 pi Z^2`.
#[inline]
pub fn shear_lifted(x1: f64, x2: f64, dir: Direction, tau: f64) -> (f64, f64) {
    match dir {
        Direction::Horizontal => (x1 + tau * sin_torus(x2), x2),
        Direction::Vertical => (x1, x2 + tau * sin_torus(x1)),
    }
}

/// Shear on the torus with an arbitrary real magnitude.
#[inline]
pub fn shear(p: TorusPoint, dir: Direction, tau: f64) -> TorusPoint {
    let (a, b) = shear_lifted(p.x1, p.x2, dir, tau);
    TorusPoint::new(a, b)
}

#[inline]
pub fn apply_step(p: TorusPoint, s: ShearStep) -> TorusPoint {
    shear(p, s.direction, s.tau)
}

#[inline]
pub fn apply_step_inverse(p: TorusPoint, s: ShearStep) -> TorusPoint {
    shear(p, s.direction, -s.tau)
}

pub fn flow(p: TorusPoint, sched: &Schedule) -> TorusPoint {
    sched.steps.iter().fold(p, |q, &s| apply_step(q, s))
}

pub fn flow_inverse(p: TorusPoint, sched: &Schedule) -> TorusPoint {
    sched.steps.iter().rev().fold(p, |q, &s| apply_step_inverse(q, s))
}

/// Apply a raw alternating magnitude sequence (H first), allowing any real
/// values. Used by finite-difference code that needs `tau - h < 0`.
pub fn flow_magnitudes(p: TorusPoint, taus: &[f64]) -> TorusPoint {
    taus.iter()
        .enumerate()
        .fold(p, |q, (i, &t)| shear(q, Direction::of_index(i), t))
}

/// Row-major real 2x2 matrix `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jacobian2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Jacobian2 {
    pub const IDENTITY: Jacobian2 = Jacobian2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Jacobian2 { a, b, c, d }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &Jacobian2) -> Jacobian2 {
        Jacobian2 {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    /// Entries in the order `(a, b, c, d)`.
    pub fn flatten(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn frobenius(&self) -> f64 {
        self.flatten().iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Derivative of a single shear with arbitrary real magnitude at `p`.
#[inline]
pub fn shear_jacobian(p: TorusPoint, dir: Direction, tau: f64) -> Jacobian2 {
    match dir {
        Direction::Horizontal => Jacobian2::new(1.0, tau * p.x2.cos(), 0.0, 1.0),
        Direction::Vertical => Jacobian2::new(1.0, 0.0, tau * p.x1.cos(), 1.0),
    }
}

pub fn jacobian_step(p: TorusPoint, s: ShearStep) -> Jacobian2 {
    shear_jacobian(p, s.direction, s.tau)
}

/// Image point and the derivative of the flow, accumulated along the trajectory.
pub fn tangent_flow(p: TorusPoint, sched: &Schedule) -> (TorusPoint, Jacobian2) {
    tangent_flow_magnitudes(p, sched.magnitudes().as_slice())
}

pub fn tangent_flow_magnitudes(p: TorusPoint, taus: &[f64]) -> (TorusPoint, Jacobian2) {
    let mut q = p;
    let mut m = Jacobian2::IDENTITY;
    for (i, &t) in taus.iter().enumerate() {
        let dir = Direction::of_index(i);
        m = shear_jacobian(q, dir, t).mul(&m);
        q = shear(q, dir, t);
    }
    (q, m)
}

/// `L^1` norm of the spatial gradient of `tau * sin` over one unit-time step:
/// `tau * int_{T^2} |cos| = 8 pi tau`.
pub fn step_grad_l1(s: ShearStep) -> f64 {
    8.0 * PI * s.tau
}

/// How a schedule was produced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Provenance {
    RandomUniform { t_max: f64, seed: u64 },
    ConstantDeterministic { t_max: f64 },
    Explicit,
}

impl Provenance {
    fn label(&self) -> &'static str {
        match self {
            Provenance::RandomUniform { .. } => "random_uniform",
            Provenance::ConstantDeterministic { .. } => "constant_deterministic",
            Provenance::Explicit => "explicit",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A finite sequence of whole (horizontal, vertical) shear pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    steps: Vec<ShearStep>,
    provenance: Provenance,
}

impl Schedule {
    /// Schedule with no steps.
    pub fn empty() -> Self {
        Schedule {
            steps: Vec::new(),
            provenance: Provenance::Explicit,
        }
    }

    /// Build from explicit magnitudes, alternating H, V, H, V, ...
    pub fn from_magnitudes(taus: &[f64]) -> Result<Self> {
        if !taus.len().is_multiple_of(2) {
            return Err(invalid(format!(
                "schedules hold whole (H, V) pairs; got {} magnitudes",
                taus.len()
            )));
        }
        let steps = taus
            .iter()
            .enumerate()
            .map(|(i, &t)| ShearStep::new(Direction::of_index(i), t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Schedule {
            steps,
            provenance: Provenance::Explicit,
        })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let taus: Vec<f64> = pairs.iter().flat_map(|&(h, v)| [h, v]).collect();
        Self::from_magnitudes(&taus)
    }

    /// Build from steps, checking strict alternation starting with H.
    pub fn from_steps(steps: Vec<ShearStep>) -> Result<Self> {
        if !steps.len().is_multiple_of(2) {
            return Err(invalid("schedules hold whole (H, V) pairs"));
        }
        for (i, s) in steps.iter().enumerate() {
            if s.direction != Direction::of_index(i) {
                return Err(invalid(format!("step {i} breaks H/V alternation")));
            }
        }
        Ok(Schedule {
            steps,
            provenance: Provenance::Explicit,
        })
    }

    pub fn steps(&self) -> &[ShearStep] {
        &self.steps
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn n_pairs(&self) -> usize {
        self.steps.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.tau).collect()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (ShearStep, ShearStep)> + '_ {
        self.steps.chunks_exact(2).map(|c| (c[0], c[1]))
    }

    /// The first `n_pairs` pairs, keeping the provenance tag.
    pub fn prefix(&self, n_pairs: usize) -> Schedule {
        let n = (2 * n_pairs).min(self.steps.len());
        Schedule {
            steps: self.steps[..n].to_vec(),
            provenance: self.provenance,
        }
    }

    /// Concatenate, yielding an explicit schedule.
    pub fn then(&self, other: &Schedule) -> Schedule {
        let mut steps = self.steps.clone();
        steps.extend_from_slice(&other.steps);
        Schedule {
            steps,
            provenance: Provenance::Explicit,
        }
    }

    /// Cumulative `sum_i 8 pi tau_i`.
    pub fn grad_l1(&self) -> f64 {
        self.steps.iter().fold(0.0, |acc, &s| acc + step_grad_l1(s))
    }

    pub fn max_tau(&self) -> f64 {
        self.steps.iter().map(|s| s.tau).fold(0.0, f64::max)
    }

    /// Rewrite the schedule so that every magnitude is at most `bound`,
    /// using the identities `(t1, t2) = (t1/2, 0, t1/2, t2)` and
    /// `(t1, t2) = (t1, t2/2, 0, t2/2)`. The composed map is unchanged.
    pub fn split_to_bound(&self, bound: f64) -> Result<Schedule> {
        if !(bound > 0.0) {
            return Err(invalid("magnitude bound must be positive"));
        }
        let mut out = Vec::new();
        for (h, v) in self.pairs() {
            let mut stack = vec![(h.tau, v.tau)];
            // depth-first keeps the original order
            while let Some((a, b)) = stack.pop() {
                if a > bound {
                    stack.push((a / 2.0, b));
                    stack.push((a / 2.0, 0.0));
                } else if b > bound {
                    stack.push((0.0, b / 2.0));
                    stack.push((a, b / 2.0));
                } else {
                    out.push((a, b));
                }
            }
        }
        Schedule::from_pairs(&out)
    }
}

/// Build a random or constant schedule of `n_pairs` whole pairs.
pub fn make_schedule(provenance: Provenance, n_pairs: usize) -> Result<Schedule> {
    if n_pairs == 0 {
        return Err(invalid("n_pairs must be at least 1"));
    }
    let steps = match provenance {
        Provenance::RandomUniform { t_max, seed } => {
            check_t(t_max)?;
            let mut rng = seed::stream_rng(seed, 0);
            (0..2 * n_pairs)
                .map(|i| ShearStep {
                    direction: Direction::of_index(i),
                    tau: rng.random::<f64>() * t_max,
                })
                .collect()
        }
        Provenance::ConstantDeterministic { t_max } => {
            check_t(t_max)?;
            (0..2 * n_pairs)
                .map(|i| ShearStep {
                    direction: Direction::of_index(i),
                    tau: t_max,
                })
                .collect()
        }
        Provenance::Explicit => {
            return Err(invalid(
                "explicit schedules are built from magnitudes, not generated",
            ))
        }
    };
    Ok(Schedule { steps, provenance })
}

fn check_t(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("T must be finite and > 0, got {t}")))
    }
}

#[derive(Serialize, Deserialize)]
struct ScheduleRecord {
    provenance: String,
    #[serde(rename = "T")]
    t_max: Option<f64>,
    seed: Option<u64>,
    n_pairs: usize,
    steps: Vec<ShearStep>,
}

impl Schedule {
    pub fn to_json(&self) -> String {
        let (t_max, seed) = match self.provenance {
            Provenance::RandomUniform { t_max, seed } => (Some(t_max), Some(seed)),
            Provenance::ConstantDeterministic { t_max } => (Some(t_max), None),
            Provenance::Explicit => (None, None),
        };
        let rec = ScheduleRecord {
            provenance: self.provenance.label().to_string(),
            t_max,
            seed,
            n_pairs: self.n_pairs(),
            steps: self.steps.clone(),
        };
        serde_json::to_string(&rec).expect("schedule serializes")
    }

    pub fn from_json(s: &str) -> Result<Schedule> {
        let rec: ScheduleRecord = serde_json::from_str(s)?;
        let provenance = match (rec.provenance.as_str(), rec.t_max, rec.seed) {
            ("random_uniform", Some(t_max), Some(seed)) => Provenance::RandomUniform { t_max, seed },
            ("constant_deterministic", Some(t_max), _) => Provenance::ConstantDeterministic { t_max },
            ("explicit", _, _) => Provenance::Explicit,
            (p, _, _) => return Err(invalid(format!("bad provenance record {p:?}"))),
        };
        let mut sched = Schedule::from_steps(
            rec.steps
                .into_iter()
                .map(|s| ShearStep::new(s.direction, s.tau))
                .collect::<Result<Vec<_>>>()?,
        )?;
        if sched.n_pairs() != rec.n_pairs {
            return Err(invalid("n_pairs disagrees with the step list"));
        }
        sched.provenance = provenance;
        Ok(sched)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(p: TorusPoint, q: TorusPoint, tol: f64) -> bool {
        p.dist(&q) <= tol
    }

    #[test]
    fn step_examples() {
        let p = TorusPoint::new(FRAC_PI_2, FRAC_PI_2);
        let q = apply_step(p, ShearStep::horizontal(PI).unwrap());
        assert!(close(q, TorusPoint::new(1.5 * PI, FRAC_PI_2), 1e-14));
        let r = apply_step(q, ShearStep::vertical(PI).unwrap());
        assert!(close(r, TorusPoint::new(1.5 * PI, 1.5 * PI), 1e-14));
        let id = apply_step(TorusPoint::new(1.0, 2.0), ShearStep::horizontal(0.0).unwrap());
        assert_eq!(id, TorusPoint::new(1.0, 2.0));
    }

    #[test]
    fn inverse_examples() {
        let p = TorusPoint::new(1.5 * PI, FRAC_PI_2);
        let q = apply_step_inverse(p, ShearStep::horizontal(PI).unwrap());
        assert!(close(q, TorusPoint::new(FRAC_PI_2, FRAC_PI_2), 1e-14));
        let s = Schedule::from_magnitudes(&[PI, PI]).unwrap();
        let back = flow_inverse(TorusPoint::new(1.5 * PI, 1.5 * PI), &s);
        assert!(close(back, TorusPoint::new(FRAC_PI_2, FRAC_PI_2), 1e-13));
        assert_eq!(flow_inverse(p, &Schedule::empty()), p);
    }

    #[test]
    fn constant_two_pi_fixes_clump_center() {
        let s = make_schedule(Provenance::ConstantDeterministic { t_max: TAU }, 1).unwrap();
        let p = TorusPoint::new(FRAC_PI_2, FRAC_PI_2);
        assert!(close(flow(p, &s), p, 1e-14));
    }

    #[test]
    fn step_jacobians() {
        let p = TorusPoint::new(FRAC_PI_2, FRAC_PI_2);
        let j = jacobian_step(p, ShearStep::horizontal(PI).unwrap());
        assert!((j.b).abs() < 1e-15 && j.a == 1.0 && j.c == 0.0 && j.d == 1.0);
        let j = jacobian_step(TorusPoint::new(0.0, 0.7), ShearStep::vertical(2.5).unwrap());
        assert_eq!(j, Jacobian2::new(1.0, 0.0, 2.5, 1.0));
        assert_eq!(j.det(), 1.0);
    }

    #[test]
    fn wrap_edge() {
        assert_eq!(wrap(-1e-18), 0.0);
        assert!(wrap(TAU) < TAU);
        let p = TorusPoint::new(-0.1, 7.0);
        assert!(p.x1() >= 0.0 && p.x1() < TAU && p.x2() < TAU);
    }

    #[test]
    fn distance_bounds() {
        let p = TorusPoint::new(0.0, 0.0);
        let q = TorusPoint::new(PI, PI);
        assert!((p.dist(&q) - 2f64.sqrt() * PI).abs() < 1e-12);
        let a = TorusPoint::new(0.05, 6.25);
        let b = TorusPoint::new(6.2, 0.01);
        assert!(a.dist(&b) < 0.2);
    }

    #[test]
    fn make_schedule_rules() {
        let s = make_schedule(Provenance::ConstantDeterministic { t_max: TAU }, 3).unwrap();
        assert_eq!(s.steps().len(), 6);
        for (i, st) in s.steps().iter().enumerate() {
            assert_eq!(st.direction(), Direction::of_index(i));
            assert_eq!(st.tau(), TAU);
        }
        assert!(make_schedule(Provenance::ConstantDeterministic { t_max: 0.0 }, 3).is_err());
        assert!(make_schedule(Provenance::RandomUniform { t_max: -1.0, seed: 1 }, 3).is_err());
        assert!(make_schedule(Provenance::ConstantDeterministic { t_max: 1.0 }, 0).is_err());
        assert!(Schedule::from_magnitudes(&[1.0]).is_err());
        assert!(ShearStep::horizontal(-0.1).is_err());
    }

    #[test]
    fn random_schedule_is_uniform_and_reproducible() {
        let t = 7.0;
        let a = make_schedule(Provenance::RandomUniform { t_max: t, seed: 42 }, 50_000).unwrap();
        let b = make_schedule(Provenance::RandomUniform { t_max: t, seed: 42 }, 50_000).unwrap();
        assert_eq!(a, b);
        let taus = a.magnitudes();
        assert!(taus.iter().all(|&x| (0.0..=t).contains(&x)));
        let n = taus.len() as f64;
        let mean = taus.iter().sum::<f64>() / n;
        let sigma = t / 12f64.sqrt() / n.sqrt();
        assert!((mean - t / 2.0).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn grad_norm() {
        assert_eq!(step_grad_l1(ShearStep::horizontal(0.0).unwrap()), 0.0);
        // midpoint quadrature of int |cos x2| over the torus
        let n = 100_000;
        let h = TAU / n as f64;
        let q: f64 = (0..n).map(|i| ((i as f64 + 0.5) * h).cos().abs()).sum::<f64>() * h * TAU;
        let g = step_grad_l1(ShearStep::vertical(1.0).unwrap());
        assert!((g - q).abs() < 1e-6, "{g} vs {q}");
        assert!((g - 25.1327).abs() < 1e-4);
        let s = Schedule::from_magnitudes(&[1.0, 2.0, 3.0, 0.5]).unwrap();
        assert!((s.grad_l1() - 8.0 * PI * 6.5).abs() < 1e-12);
    }

    #[test]
    fn split_preserves_map() {
        let s = Schedule::from_magnitudes(&[7.3, 0.4, 1.0, 9.9]).unwrap();
        let b = s.split_to_bound(2.0).unwrap();
        assert!(b.max_tau() <= 2.0);
        for k in 0..20 {
            let p = TorusPoint::new(0.3 * k as f64, 1.7 + 0.11 * k as f64);
            assert!(flow(p, &s).dist(&flow(p, &b)) < 1e-12);
        }
    }

    #[test]
    fn json_roundtrip() {
        let s = make_schedule(Provenance::RandomUniform { t_max: 20.0, seed: 9 }, 4).unwrap();
        let js = s.to_json();
        assert!(js.contains("\"provenance\":\"random_uniform\""));
        assert!(js.contains("\"dir\":\"H\""));
        let back = Schedule::from_json(&js).unwrap();
        assert_eq!(back, s);
    }
}
