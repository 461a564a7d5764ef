//! Neighbourhood of the degenerate fixed point `p = (pi/2, pi/2)` under
//! constant durations `T in 2 pi N`.
//!
//! Near `p` one pair-step moves points by at most `C |x - p|^2`, so the ball
//! `B_{h / (e n C)}(p)` stays inside `B_h(p)` for `n` steps and clumps only
//! shrink algebraically.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::flow::{apply_step, ShearStep, TorusPoint};

/// Default number of boundary samples per probed circle.
pub const CLUMP_BOUNDARY_POINTS: usize = 4096;
/// Relative width at which the radius bisection stops.
const BISECTION_REL_TOL: f64 = 1e-4;
/// Halvings tried below the previous radius before giving up.
const MAX_HALVINGS: usize = 40;

pub fn clump_center() -> TorusPoint {
    TorusPoint::new(FRAC_PI_2, FRAC_PI_2)
}

/// Checks `T = 2 pi k` for a positive integer `k` (to round-off).
pub fn validate_period_multiple(t_max: f64) -> Result<()> {
    let k = t_max / TAU;
    if !(t_max.is_finite() && k.round() >= 1.0 && (k - k.round()).abs() <= 1e-9 * k.max(1.0)) {
        return Err(invalid(format!("T must be a positive multiple of 2 pi, got {t_max}")));
    }
    Ok(())
}

fn pair_map(x: TorusPoint, t_max: f64, n: usize) -> TorusPoint {
    let h = ShearStep::horizontal(t_max).expect("validated magnitude");
    let v = ShearStep::vertical(t_max).expect("validated magnitude");
    (0..n).fold(x, |q, _| apply_step(apply_step(q, h), v))
}

fn circle_point(r: f64, k: usize, m: usize) -> TorusPoint {
    let th = TAU * k as f64 / m as f64;
    TorusPoint::new(FRAC_PI_2 + r * th.cos(), FRAC_PI_2 + r * th.sin())
}

/// Largest distance from `p` of the image of the sampled circle of radius
/// `r` after `n` pair-steps.
fn image_radius(r: f64, n: usize, t_max: f64, m: usize) -> f64 {
    let p = clump_center();
    (0..m)
        .into_par_iter()
        .map(|k| pair_map(circle_point(r, k, m), t_max, n).dist(&p))
        .reduce(|| 0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClumpRow {
    pub n: usize,
    pub r_n: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClumpTable {
    pub h: f64,
    #[serde(rename = "T")]
    pub t_max: f64,
    pub boundary_points: usize,
    pub rows: Vec<ClumpRow>,
}

impl ClumpTable {
    /// `inf_{n >= 1} n r_n`.
    pub fn inf_n_r(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.n > 0)
            .map(|r| r.n as f64 * r.r_n)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,r_n,n_r_n")?;
        for r in &self.rows {
            writeln!(w, "{},{},{}", r.n, r.r_n, r.n as f64 * r.r_n)?;
        }
        Ok(())
    }
}

/// Clump radii `r_n` for `n = 0..=n_steps`: the largest verified radius
/// whose sampled boundary circle stays in the closed ball `B_h(p)` after `n`
/// constant pair-steps, found by bisection below `r_{n-1}`.
pub fn clump_radius(n_steps: usize, h: f64, t_max: f64, boundary_points: usize) -> Result<ClumpTable> {
    validate_period_multiple(t_max)?;
    if !(h > 0.0 && h < 1.0) {
        return Err(invalid(format!("h must lie in (0, 1), got {h}")));
    }
    if boundary_points < 1000 {
        return Err(invalid("at least 1000 boundary points are required"));
    }
    let inside = |r: f64, n: usize| image_radius(r, n, t_max, boundary_points) <= h;
    let mut rows = vec![ClumpRow { n: 0, r_n: h }];
    let mut prev = h;
    for n in 1..=n_steps {
        let r_n = if inside(prev, n) {
            prev
        } else {
            // halve until a radius passes, then bisect between it and the
            // last failing radius
            let mut hi = prev;
            let mut lo = None;
            for _ in 0..MAX_HALVINGS {
                let r = hi / 2.0;
                if inside(r, n) {
                    lo = Some(r);
                    break;
                }
                hi = r;
            }
            let Some(mut lo) = lo else {
                return Err(Error::ClumpEscape { step: n, radius: hi });
            };
            while hi - lo > BISECTION_REL_TOL * lo {
                let mid = 0.5 * (lo + hi);
                if inside(mid, n) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        rows.push(ClumpRow { n, r_n });
        prev = r_n;
    }
    Ok(ClumpTable {
        h,
        t_max,
        boundary_points,
        rows,
    })
}

/// Empirical constant in `|Phi_1(x) - p| <= |x - p| + C |x - p|^2`: the
/// largest `(|Phi_1(x) - p| - |x - p|) / |x - p|^2` over `n_angles` points on
/// each of `n_radii` log-spaced circles with radii in `[1e-3 h, h]`.
pub fn displacement_constant(h: f64, t_max: f64, n_radii: usize, n_angles: usize) -> Result<f64> {
    validate_period_multiple(t_max)?;
    if !(h > 0.0 && h < 1.0) || n_radii < 2 || n_angles < 8 {
        return Err(invalid("need 0 < h < 1, n_radii >= 2 and n_angles >= 8"));
    }
    let p = clump_center();
    let c = (0..n_radii)
        .into_par_iter()
        .map(|i| {
            let r = h * 1e-3f64.powf(1.0 - i as f64 / (n_radii - 1) as f64);
            (0..n_angles)
                .map(|k| {
                    let x = circle_point(r, k, n_angles);
                    let d = x.dist(&p);
                    (pair_map(x, t_max, 1).dist(&p) - d) / (d * d)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(c)
}
