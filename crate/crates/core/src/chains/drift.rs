//! Monte Carlo check of the Lyapunov-Foster drift condition near the fixed
//! set for the potential `V(x) = dist_inf(x, F)^(-alpha)`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::flow::{dist_inf_to_fixed_set, wrap, TorusPoint};
use crate::seed;
use crate::stats::Accumulator;

const BLOCK: usize = 1 << 15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftParams {
    pub alpha: f64,
    #[serde(rename = "T")]
    pub t_max: f64,
    pub r0: f64,
    pub n_mc: usize,
    pub seed: u64,
}

/// `min(pi/8, pi/(4(T+1)))`: keeps `2(T+1) r0 < pi` satisfiable.
pub fn default_r0(t_max: f64) -> f64 {
    (PI / 8.0).min(PI / (4.0 * (t_max + 1.0)))
}

impl DriftParams {
    /// `alpha = 1/20`, `T = 5e5`, `n_mc = 1e6`.
    pub fn paper_constants(seed: u64) -> Self {
        let t_max = 5e5;
        DriftParams {
            alpha: 1.0 / 20.0,
            t_max,
            r0: default_r0(t_max),
            n_mc: 1_000_000,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(invalid("T must be > 0"));
        }
        if !(self.r0 > 0.0 && self.r0 <= FRAC_PI_2) {
            return Err(invalid(format!("r0 must lie in (0, pi/2], got {}", self.r0)));
        }
        if self.n_mc == 0 {
            return Err(invalid("n_mc must be at least 1"));
        }
        Ok(())
    }
}

/// `V(x)`; infinite on the fixed set.
pub fn drift_potential(x: &TorusPoint, alpha: f64) -> f64 {
    dist_inf_to_fixed_set(x).powf(-alpha)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    pub ratio: f64,
    pub std_error: f64,
}

/// Estimate `E[V(Phi_1(x))] / V(x)` over `n_mc` uniform magnitude pairs.
pub fn drift_ratio(x: TorusPoint, params: &DriftParams) -> Result<DriftEstimate> {
    params.validate()?;
    let d0 = dist_inf_to_fixed_set(&x);
    if d0 == 0.0 {
        return Err(Error::OnFixedSet((x.x1(), x.x2())));
    }
    let v0 = d0.powf(-params.alpha);
    let n_blocks = params.n_mc.div_ceil(BLOCK);
    let blocks: Vec<Accumulator> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = seed::stream_rng(params.seed, b as u64);
            let len = BLOCK.min(params.n_mc - b * BLOCK);
            let mut acc = Accumulator::default();
            for _ in 0..len {
                let t1 = rng.random::<f64>() * params.t_max;
                let t2 = rng.random::<f64>() * params.t_max;
                // lifted coordinates, reduced once at the end
                let a = x.x1() + t1 * x.x2().sin();
                let c = x.x2() + t2 * a.sin();
                let img = TorusPoint::new(wrap(a), wrap(c));
                let d = dist_inf_to_fixed_set(&img).max(f64::MIN_POSITIVE);
                acc.push(d.powf(-params.alpha) / v0);
            }
            acc
        })
        .collect();
    let mut total = Accumulator::default();
    for b in &blocks {
        total.merge(b);
    }
    Ok(DriftEstimate {
        ratio: total.mean(),
        std_error: total.std_error(),
    })
}

/// Log-spaced test locations around the fixed point `(0, 0)`.
///
/// Base points are `(t d, d)` for `d` log-spaced in `[r_min, r0]` and each
/// fraction `t` in `(0, 1]`, i.e. the sector `0 < x <= y <= r0`; each base
/// point is mapped into all eight sectors by coordinate swaps and sign
/// flips.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftGrid {
    pub n_radial: usize,
    /// `r_min = r0 * r_min_factor`.
    pub r_min_factor: f64,
    pub fractions: Vec<f64>,
}

impl Default for DriftGrid {
    fn default() -> Self {
        DriftGrid {
            n_radial: 4,
            r_min_factor: 1e-6,
            fractions: vec![0.25, 0.75],
        }
    }
}

impl DriftGrid {
    pub fn points(&self, r0: f64) -> Vec<TorusPoint> {
        let mut out = Vec::new();
        if self.n_radial == 0 {
            return out;
        }
        let rmin = r0 * self.r_min_factor;
        for i in 0..self.n_radial {
            let d = if self.n_radial == 1 {
                r0
            } else {
                rmin * (r0 / rmin).powf(i as f64 / (self.n_radial - 1) as f64)
            };
            for &t in &self.fractions {
                let (a, b) = (t * d, d);
                for (u, w) in [(a, b), (b, a)] {
                    for (s1, s2) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
                        out.push(TorusPoint::new(wrap(s1 * u), wrap(s2 * w)));
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    pub point: TorusPoint,
    pub ratio: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftSweep {
    pub rows: Vec<DriftRow>,
}

impl DriftSweep {
    /// Row with the largest estimated ratio.
    pub fn worst(&self) -> Option<DriftRow> {
        self.rows.iter().copied().max_by(|a, b| a.ratio.total_cmp(&b.ratio))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "point_x1,point_x2,ratio,std_error")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{}", r.point.x1(), r.point.x2(), r.ratio, r.std_error)?;
        }
        Ok(())
    }
}

/// Apply [`drift_ratio`] over the grid. Point `i` uses seed
/// `seed::derive(params.seed, i)`.
pub fn drift_sweep(params: &DriftParams, grid: &DriftGrid) -> Result<DriftSweep> {
    params.validate()?;
    let pts = grid.points(params.r0);
    let mut rows = Vec::with_capacity(pts.len());
    for (i, p) in pts.into_iter().enumerate() {
        let local = DriftParams {
            seed: seed::derive(params.seed, i as u64),
            ..*params
        };
        let est = drift_ratio(p, &local)?;
        rows.push(DriftRow {
            point: p,
            ratio: est.ratio,
            std_error: est.std_error,
        });
    }
    Ok(DriftSweep { rows })
}
