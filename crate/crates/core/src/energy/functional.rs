use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::boundary::{BoundaryTracker, RefinementOptions};
use super::index::SegmentIndex;
use crate::error::{invalid, Error, Result};
use crate::flow::{apply_step, step_grad_l1, Schedule, TorusPoint};
use crate::seed;
use crate::stats::Accumulator;
use crate::transport::MixReport;

/// Distances below this are excluded from the quadrature and counted.
pub const DISTANCE_FLOOR: f64 = 1e-12;
/// Area of the strip `0 < x1 < pi`.
pub const STRIP_AREA: f64 = 2.0 * PI * PI;
/// Minimum number of quadrature samples.
pub const MIN_QUAD: usize = 1000;
const QUAD_BLOCK: usize = 4096;

/// `E(0) = 2 pi * 2 * (int_0^1 -log s ds + int_1^{pi/2} log s ds)`.
pub fn strip_energy_exact() -> f64 {
    4.0 * PI * (2.0 + FRAC_PI_2 * FRAC_PI_2.ln() - FRAC_PI_2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub value: f64,
    pub std_error: f64,
    /// Samples closer than the floor to the boundary.
    pub excluded: u64,
    pub n_quad: usize,
}

/// Uniform samples of the strip; block `b` draws from stream `b`.
fn sample_strip(n_quad: usize, seed: u64) -> Vec<TorusPoint> {
    (0..n_quad.div_ceil(QUAD_BLOCK))
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = seed::stream_rng(seed, b as u64);
            let len = QUAD_BLOCK.min(n_quad - b * QUAD_BLOCK);
            (0..len)
                .map(|_| TorusPoint::new(PI * rng.random::<f64>(), TAU * rng.random::<f64>()))
                .collect::<Vec<_>>()
        })
        .collect()
}

fn estimate(points: &[TorusPoint], index: &SegmentIndex) -> EnergyEstimate {
    let blocks: Vec<(Accumulator, u64)> = points
        .par_chunks(QUAD_BLOCK)
        .map(|chunk| {
            let mut acc = Accumulator::default();
            let mut excluded = 0;
            for &p in chunk {
                let d = index.distance(p);
                if d < DISTANCE_FLOOR {
                    excluded += 1;
                } else {
                    acc.push(d.ln().abs());
                }
            }
            (acc, excluded)
        })
        .collect();
    let mut acc = Accumulator::default();
    let mut excluded = 0;
    for (a, e) in &blocks {
        acc.merge(a);
        excluded += e;
    }
    EnergyEstimate {
        value: STRIP_AREA * acc.mean(),
        std_error: STRIP_AREA * acc.std_error(),
        excluded,
        n_quad: points.len(),
    }
}

fn check_quad(n_quad: usize) -> Result<()> {
    if n_quad < MIN_QUAD {
        return Err(invalid(format!("n_quad must be at least {MIN_QUAD}, got {n_quad}")));
    }
    Ok(())
}

/// Monte Carlo estimate of `E = int_L |log dist(Phi x, Phi(dL))| dx` after
/// the given schedule.
pub fn energy_e(prefix: &Schedule, n_quad: usize, seed: u64, opts: &RefinementOptions) -> Result<EnergyEstimate> {
    check_quad(n_quad)?;
    let mut tracker = BoundaryTracker::new(*opts)?;
    for &s in prefix.steps() {
        tracker.step(s)?;
    }
    let mut points = sample_strip(n_quad, seed);
    points.par_iter_mut().for_each(|p| {
        *p = prefix.steps().iter().fold(*p, |q, &s| apply_step(q, s));
    });
    let (a, b) = tracker.loops();
    Ok(estimate(&points, &SegmentIndex::build(&[a, b])))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub n: usize,
    #[serde(rename = "E")]
    pub e: f64,
    pub std_err: f64,
    pub cum_grad_l1: f64,
    #[serde(rename = "C_hat_running")]
    pub c_hat_running: f64,
    pub excluded: u64,
    pub vertices: usize,
    pub capped_edges: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySeries {
    pub rows: Vec<EnergyRow>,
    /// `max_n (E_n - E_0) / cum_grad_l1(n)`, 0 when no step has positive norm.
    #[serde(rename = "C_hat")]
    pub c_hat: f64,
    pub n_quad: usize,
    pub seed: u64,
    pub refinement_tol: f64,
}

impl EnergySeries {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,E,std_err,cum_grad_l1,C_hat_running")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{}", r.n, r.e, r.std_err, r.cum_grad_l1, r.c_hat_running)?;
        }
        Ok(())
    }

    /// `(E_n - E_0) / cum_grad_l1(n)` for rows with positive cumulative norm.
    pub fn growth_ratios(&self) -> Vec<(usize, f64)> {
        let e0 = self.rows[0].e;
        self.rows
            .iter()
            .filter(|r| r.cum_grad_l1 > 0.0)
            .map(|r| (r.n, (r.e - e0) / r.cum_grad_l1))
            .collect()
    }
}

/// `E` after every pair-step prefix, using the same quadrature samples for
/// every prefix.
pub fn energy_series(sched: &Schedule, n_quad: usize, seed: u64, opts: &RefinementOptions) -> Result<EnergySeries> {
    match energy_series_partial(sched, n_quad, seed, opts)? {
        (series, None) => Ok(series),
        (_, Some(e)) => Err(e),
    }
}

/// Like [`energy_series`], but a failure while advancing the boundary (a
/// refinement overflow) ends the series early instead of discarding it: the
/// rows computed so far come back together with the error.
pub fn energy_series_partial(
    sched: &Schedule,
    n_quad: usize,
    seed: u64,
    opts: &RefinementOptions,
) -> Result<(EnergySeries, Option<Error>)> {
    check_quad(n_quad)?;
    let mut tracker = BoundaryTracker::new(*opts)?;
    let mut points = sample_strip(n_quad, seed);
    let mut rows = Vec::with_capacity(sched.n_pairs() + 1);
    let mut cum = 0.0;
    let mut c_hat: f64 = 0.0;
    let mut e0 = 0.0;
    let mut failure = None;
    for n in 0..=sched.n_pairs() {
        if n > 0 {
            let (h, v) = (sched.steps()[2 * n - 2], sched.steps()[2 * n - 1]);
            if let Err(e) = tracker.step(h).and_then(|_| tracker.step(v)) {
                failure = Some(e);
                break;
            }
            points.par_iter_mut().for_each(|p| *p = apply_step(apply_step(*p, h), v));
            cum += step_grad_l1(h) + step_grad_l1(v);
        }
        let (a, b) = tracker.loops();
        let est = estimate(&points, &SegmentIndex::build(&[a, b]));
        if n == 0 {
            e0 = est.value;
        } else if cum > 0.0 {
            c_hat = c_hat.max((est.value - e0) / cum);
        }
        rows.push(EnergyRow {
            n,
            e: est.value,
            std_err: est.std_error,
            cum_grad_l1: cum,
            c_hat_running: c_hat,
            excluded: est.excluded,
            vertices: tracker.vertex_count(),
            capped_edges: a.capped_edges() + b.capped_edges(),
        });
    }
    let series = EnergySeries {
        rows,
        c_hat,
        n_quad,
        seed,
        refinement_tol: opts.tol,
    };
    Ok((series, failure))
}

/// Largest `|log geom_scale(n)| / cum_grad_l1(n)` over rows with a positive
/// scale and norm: the empirical constant in `|log mix| <= K ||D b||_L1`.
pub fn log_mix_ratio(mix: &MixReport) -> Option<f64> {
    mix.rows
        .iter()
        .filter(|r| r.cum_grad_l1 > 0.0)
        .filter_map(|r| {
            let g = r.geom_scale?;
            (g > 0.0).then(|| g.ln().abs() / r.cum_grad_l1)
        })
        .reduce(f64::max)
}
