use std::io::Write;

use serde::{Deserialize, Serialize};

use super::field::{advect, InitialData};
use super::spectral::{geometric_scale, h_minus_one};
use crate::error::{invalid, Result};
use crate::flow::Schedule;
use crate::stats::{linear_fit, LinearFit};

/// First pair-step index used by default decay fits; steps 1 and 2 are
/// treated as transient.
pub const DEFAULT_FIT_START: usize = 3;

/// Inclusive range of step indices used by a fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitWindow {
    pub start: usize,
    pub end: usize,
}

impl FitWindow {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start >= end {
            return Err(invalid(format!("fit window [{start}, {end}] needs at least two steps")));
        }
        Ok(FitWindow { start, end })
    }

    pub fn contains(&self, n: usize) -> bool {
        (self.start..=self.end).contains(&n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixOptions {
    /// Threshold of the geometric scale.
    pub threshold: f64,
    /// Skip the geometric scale (it dominates the cost at large `n`).
    pub geometric: bool,
    /// Fit window; `None` means `[DEFAULT_FIT_START, n_pairs]`.
    pub window: Option<FitWindow>,
}

impl Default for MixOptions {
    fn default() -> Self {
        MixOptions {
            threshold: 1.0,
            geometric: true,
            window: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixRow {
    pub n: usize,
    pub cum_grad_l1: f64,
    pub h_minus_one: f64,
    pub geom_scale: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    HMinusOne,
    GeomScale,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Step,
    CumGradL1,
}

/// Least-squares fit of `log(metric)` against an axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub window: FitWindow,
    /// Rows in the window with a positive, finite metric.
    pub n_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixFits {
    pub log_h_minus_one_vs_n: Option<MixFit>,
    pub log_h_minus_one_vs_grad: Option<MixFit>,
    pub log_geom_scale_vs_n: Option<MixFit>,
    pub log_geom_scale_vs_grad: Option<MixFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixReport {
    pub initial: String,
    pub resolution: usize,
    pub rows: Vec<MixRow>,
    pub fits: MixFits,
}

impl MixReport {
    /// Fit `log(metric)` over `window`; `None` with fewer than two usable rows.
    pub fn fit(&self, metric: Metric, axis: Axis, window: FitWindow) -> Option<MixFit> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .rows
            .iter()
            .filter(|r| window.contains(r.n))
            .filter_map(|r| {
                let m = match metric {
                    Metric::HMinusOne => r.h_minus_one,
                    Metric::GeomScale => r.geom_scale?,
                };
                let x = match axis {
                    Axis::Step => r.n as f64,
                    Axis::CumGradL1 => r.cum_grad_l1,
                };
                (m > 0.0 && m.is_finite()).then(|| (x, m.ln()))
            })
            .unzip();
        let LinearFit { slope, intercept, r2 } = linear_fit(&xs, &ys)?;
        Some(MixFit {
            slope,
            intercept,
            r2,
            window,
            n_used: xs.len(),
        })
    }

    fn refit(&mut self, window: FitWindow) {
        self.fits = MixFits {
            log_h_minus_one_vs_n: self.fit(Metric::HMinusOne, Axis::Step, window),
            log_h_minus_one_vs_grad: self.fit(Metric::HMinusOne, Axis::CumGradL1, window),
            log_geom_scale_vs_n: self.fit(Metric::GeomScale, Axis::Step, window),
            log_geom_scale_vs_grad: self.fit(Metric::GeomScale, Axis::CumGradL1, window),
        };
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,cum_grad_l1,h_minus_one,geom_scale")?;
        for r in &self.rows {
            let g = r.geom_scale.map(|g| g.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{}", r.n, r.cum_grad_l1, r.h_minus_one, g)?;
        }
        Ok(())
    }
}

/// Mixing scales after every pair-step prefix `0..=n_pairs`, with log-linear
/// decay fits.
pub fn mix_series(u0: InitialData, sched: &Schedule, n: usize, opts: &MixOptions) -> Result<MixReport> {
    let n_pairs = sched.n_pairs();
    let window = match opts.window {
        Some(w) => w,
        None => FitWindow {
            start: DEFAULT_FIT_START.min(n_pairs.saturating_sub(1)),
            end: n_pairs,
        },
    };
    let mut rows = Vec::with_capacity(n_pairs + 1);
    for k in 0..=n_pairs {
        let prefix = sched.prefix(k);
        let u = advect(u0, &prefix, n)?.into_mean_zero();
        rows.push(MixRow {
            n: k,
            cum_grad_l1: prefix.grad_l1(),
            h_minus_one: h_minus_one(&u)?,
            geom_scale: opts.geometric.then(|| geometric_scale(&u, opts.threshold)),
        });
    }
    let mut report = MixReport {
        initial: u0.to_string(),
        resolution: n,
        rows,
        fits: MixFits {
            log_h_minus_one_vs_n: None,
            log_h_minus_one_vs_grad: None,
            log_geom_scale_vs_n: None,
            log_geom_scale_vs_grad: None,
        },
    };
    report.refit(window);
    Ok(report)
}
