//! One function per experiment. Each writes its reports through [`Outputs`]
//! and returns the checks it ran.

use std::f64::consts::{E, FRAC_PI_2, FRAC_PI_4, PI};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::checks::*;
use super::config::{ExperimentConfig, ScheduleKind};
use super::manifest::Outputs;
use crate::chains::{
    drift_sweep, finite_time_exponent, furstenberg_check, in_target, jacobian_wrt_schedule,
    lyapunov_exponent, steer_projective, steer_two_point, ChainState, DriftGrid, DriftParams,
    ProjectiveState, ProjectiveTarget, RankReport, TwoPointState,
};
use crate::energy::{energy_series_partial, push_boundary, strip_energy_exact, write_loops_svg, EnergySeries};
use crate::error::Result;
use crate::flow::{
    apply_step, flow, flow_inverse, jacobian_step, Jacobian2, is_fixed_point, make_schedule, tangent_flow, wrap_signed, Provenance, Schedule,
    TorusPoint, FIXED_SET,
};
use crate::seed;
use crate::stats::linear_fit;
use crate::transport::{
    advect, clump_radius, displacement_constant, h_minus_one, mix_series, Axis, FitWindow, InitialData, Metric,
    MixOptions, ScalarField,
};

/// Stream tags separating the experiments' seeds.
mod tag {
    pub const SIMULATE: u64 = 1;
    pub const MIX: u64 = 2;
    pub const LYAPUNOV: u64 = 3;
    pub const DRIFT: u64 = 4;
    pub const STEER: u64 = 5;
    pub const ENERGY: u64 = 6;
    pub const EXACTNESS: u64 = 7;
}

/// Seed of replicate `k` of an experiment.
pub fn replicate_seed(master: u64, experiment: u64, k: u64) -> u64 {
    seed::derive(seed::derive(master, experiment), k)
}

fn sci(x: f64) -> String {
    format!("{x:.3e}")
}

fn field_svg(out: &mut Outputs, name: &str, u: &ScalarField, px: usize, range: f64) -> Result<()> {
    let mut buf = Vec::new();
    u.write_svg(&mut buf, px, range)?;
    out.write(name, &buf)
}

pub fn simulate(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Report> {
    let c = &cfg.simulate;
    let sched = match c.schedule {
        ScheduleKind::RandomUniform => make_schedule(
            Provenance::RandomUniform {
                t_max: c.t_max,
                seed: replicate_seed(cfg.seed, tag::SIMULATE, 0),
            },
            c.n_pairs,
        )?,
        ScheduleKind::Constant => make_schedule(Provenance::ConstantDeterministic { t_max: c.t_max }, c.n_pairs)?,
        ScheduleKind::Zero => Schedule::from_magnitudes(&vec![0.0; 2 * c.n_pairs])?,
    };
    let u0 = ScalarField::sample(c.resolution, |p| c.initial.eval(p))?;
    let u = advect(c.initial, &sched, c.resolution)?;

    out.write("schedule.json", sched.to_json().as_bytes())?;
    let mut u0_bytes = Vec::new();
    u0.write_binary(&mut u0_bytes)?;
    let mut u_bytes = Vec::new();
    u.write_binary(&mut u_bytes)?;
    out.write("u0.bin", &u0_bytes)?;
    out.write("field.bin", &u_bytes)?;
    let range = c.initial.sup_norm();
    field_svg(out, "u0.svg", &u0, c.svg_px, range)?;
    field_svg(out, "field.svg", &u, c.svg_px, range)?;

    #[derive(Serialize)]
    struct Summary {
        initial: String,
        resolution: usize,
        n_pairs: usize,
        cum_grad_l1: f64,
        mean_initial: f64,
        mean_final: f64,
        sup_final: f64,
        h_minus_one_initial: f64,
        h_minus_one_final: f64,
    }
    let summary = Summary {
        initial: c.initial.to_string(),
        resolution: c.resolution,
        n_pairs: c.n_pairs,
        cum_grad_l1: sched.grad_l1(),
        mean_initial: u0.mean(),
        mean_final: u.mean(),
        sup_final: u.sup_norm(),
        h_minus_one_initial: h_minus_one(&u0.clone().into_mean_zero())?,
        h_minus_one_final: h_minus_one(&u.clone().into_mean_zero())?,
    };
    out.json("summary.json", &summary)?;

    let mut r = Report::default();
    let drift = (summary.mean_final - summary.mean_initial).abs();
    let bound = 4.0 * (2.0 * PI / c.resolution as f64) * range;
    r.check(Check::new(
        "simulate: mean conservation",
        drift <= bound,
        sci(drift),
        format!("<= 4 (2 pi / n) |u0|_inf = {}", sci(bound)),
    ));
    r.check(Check::new(
        "simulate: maximum principle",
        summary.sup_final <= range,
        format!("{}", summary.sup_final),
        format!("<= {range}"),
    ));
    if c.schedule == ScheduleKind::Zero {
        r.check(Check::new(
            "simulate: zero schedule is the identity",
            u_bytes == u0_bytes,
            if u_bytes == u0_bytes { "field.bin == u0.bin" } else { "field.bin differs from u0.bin" },
            "byte-identical",
        ));
    }
    Ok(r)
}

/// Fit of `|log g|` against the step index over `window`.
fn abs_log_scale_fit(report: &crate::transport::MixReport, window: FitWindow) -> Option<crate::stats::LinearFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = report
        .rows
        .iter()
        .filter(|r| window.contains(r.n))
        .filter_map(|r| {
            let g = r.geom_scale?;
            (g > 0.0).then(|| (r.n as f64, g.ln().abs()))
        })
        .unzip();
    linear_fit(&xs, &ys)
}

/// `H^{-1}` norm of a field whose grid values are uncorrelated with mean
/// square `ms`: `sqrt(ms sum_k |k|^-2) / n` over the grid's wavenumbers.
pub fn decorrelated_h_minus_one(n: usize, ms: f64) -> f64 {
    let half = n as i64 / 2;
    let freq = |i: i64| if i < n as i64 - half { i } else { i - n as i64 };
    let mut sum = 0.0;
    for i in 0..n as i64 {
        for j in 0..n as i64 {
            let k2 = freq(i).pow(2) + freq(j).pow(2);
            if k2 > 0 {
                sum += 1.0 / k2 as f64;
            }
        }
    }
    (ms * sum).sqrt() / n as f64
}

pub fn mix(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Report> {
    let c = &cfg.mix;
    let window = FitWindow::new(c.fit_start, c.fit_end)?;
    let opts = MixOptions {
        threshold: c.threshold,
        geometric: true,
        window: Some(window),
    };
    let mut r = Report::default();
    let u0 = ScalarField::sample(c.resolution, |p| c.initial.eval(p))?;
    let ms = u0.values().iter().map(|v| v * v).sum::<f64>() / u0.values().len() as f64;
    let floor = decorrelated_h_minus_one(c.resolution, ms);
    for k in 0..c.replicates {
        let s = replicate_seed(cfg.seed, tag::MIX, k as u64);
        let sched = make_schedule(Provenance::RandomUniform { t_max: c.t_max, seed: s }, c.n_pairs)?;
        let report = mix_series(c.initial, &sched, c.resolution, &opts)?;
        out.write_with(&format!("mix_{k}.csv"), |w| report.write_csv(w))?;
        out.json(&format!("mix_{k}.json"), &report)?;

        let span = format!("[{}, {}]", window.start, window.end);
        match report.fits.log_h_minus_one_vs_n {
            Some(f) => r.check(Check::new(
                format!("mix replicate {k}: log H^-1 decays linearly"),
                f.slope < 0.0 && f.r2 > MIX_H_R2_MIN,
                format!("slope {:+.4}, R^2 {:.3} over {span}", f.slope, f.r2),
                format!("slope < 0, R^2 > {MIX_H_R2_MIN}"),
            )),
            None => r.check(Check::new(
                format!("mix replicate {k}: log H^-1 decays linearly"),
                false,
                "no usable rows",
                "a fit",
            )),
        }
        match abs_log_scale_fit(&report, window) {
            Some(f) => r.check(Check::new(
                format!("mix replicate {k}: |log geometric scale| grows linearly"),
                f.slope > 0.0 && f.r2 > MIX_SCALE_R2_MIN,
                format!("slope {:+.4}, R^2 {:.3} over {span}", f.slope, f.r2),
                format!("slope > 0, R^2 > {MIX_SCALE_R2_MIN}"),
            )),
            None => r.check(Check::new(
                format!("mix replicate {k}: |log geometric scale| grows linearly"),
                false,
                "no usable rows",
                "a fit",
            )),
        }
        // the pairs before the filaments drop below the grid spacing
        let early = FitWindow::new(0, 3.min(c.n_pairs))?;
        if let Some(f) = report.fit(Metric::HMinusOne, Axis::Step, early) {
            let least = report.rows.iter().map(|row| row.h_minus_one).fold(f64::INFINITY, f64::min);
            r.note(format!(
                "mix replicate {k}: log H^-1 over [0, {}] slope {:+.4}, R^2 {:.3}; smallest H^-1 {}, grid-decorrelated value {} at resolution {}",
                early.end,
                f.slope,
                f.r2,
                sci(least),
                sci(floor),
                c.resolution
            ));
        }
    }
    Ok(r)
}

pub fn lyapunov(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Report> {
    let c = &cfg.lyapunov;
    let s = replicate_seed(cfg.seed, tag::LYAPUNOV, 0);
    let est = lyapunov_exponent(c.t_max, c.n_steps, c.n_samples, s)?;
    // the same estimator along a schedule of zero magnitudes
    let zero = Schedule::from_magnitudes(&vec![0.0; 2 * c.n_steps])?;
    let mut rng = seed::stream_rng(s, u64::MAX);
    let control: Vec<f64> = (0..16)
        .map(|_| {
            let x = TorusPoint::random(&mut rng);
            let th = rng.random::<f64>() * 2.0 * PI;
            finite_time_exponent(x, [th.cos(), th.sin()], &zero)
        })
        .collect();

    #[derive(Serialize)]
    struct Out<'a> {
        estimate: &'a crate::chains::LyapunovEstimate,
        zero_schedule_control: &'a [f64],
    }
    out.json(
        "lyapunov.json",
        &Out {
            estimate: &est,
            zero_schedule_control: &control,
        },
    )?;
    let mut r = Report::default();
    let lower = est.lambda1_hat - 3.0 * est.std_error;
    r.check(Check::new(
        "lyapunov: positive exponent",
        lower > 0.0,
        format!("lambda1_hat {:.4} +- {:.4}, lower bound {:.4}", est.lambda1_hat, est.std_error, lower),
        "lambda1_hat - 3 SE > 0",
    ));
    let worst = control.iter().map(|v| v.abs()).fold(0.0, f64::max);
    r.check(Check::new(
        "lyapunov: zero-schedule control",
        control.iter().all(|&v| v == 0.0),
        format!("max |lambda| {worst:e} over {} starts", control.len()),
        "exactly 0",
    ));
    Ok(r)
}

pub fn drift(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Report> {
    let c = &cfg.drift;
    let params = DriftParams {
        alpha: c.alpha,
        t_max: c.t_max,
        r0: c.r0,
        n_mc: c.n_mc,
        seed: replicate_seed(cfg.seed, tag::DRIFT, 0),
    };
    let grid = DriftGrid {
        n_radial: c.n_radial,
        r_min_factor: c.r_min_factor,
        fractions: c.fractions.clone(),
    };
    let sweep = drift_sweep(&params, &grid)?;
    out.write_with("drift_sweep.csv", |w| sweep.write_csv(w))?;

    let mut r = Report::default();
    let n = sweep.rows.len();
    r.check(Check::new(
        "drift: test locations",
        n >= DRIFT_MIN_POINTS,
        n.to_string(),
        format!(">= {DRIFT_MIN_POINTS}"),
    ));
    let violations = sweep
        .rows
        .iter()
        .filter(|row| !(row.ratio <= DRIFT_BOUND + 3.0 * row.std_error))
        .count();
    let worst = sweep.worst();
    r.check(Check::new(
        "drift: ratio below 1 - 1e-4",
        n > 0 && violations == 0,
        match worst {
            Some(w) => format!(
                "worst ratio {:.6} +- {} at ({}, {}); {violations} violations",
                w.ratio,
                sci(w.std_error),
                sci(wrap_signed(w.point.x1())),
                sci(wrap_signed(w.point.x2()))
            ),
            None => "no points".into(),
        },
        format!("<= {DRIFT_BOUND} + 3 SE at every point"),
    ));
    Ok(r)
}

/// The three small-set configurations and their expected matrices.
/// Worst error at each profiled pair count.
type Profile = Vec<(usize, f64)>;

/// Name, chain state, magnitudes, expected derivative and expected rank.
type SmallSetCase = (&'static str, ChainState, Vec<f64>, Vec<Vec<f64>>, usize);

fn small_set_cases() -> Result<Vec<SmallSetCase>> {
    let half = TorusPoint::new(FRAC_PI_2, FRAC_PI_2);
    Ok(vec![
        (
            "one-point",
            ChainState::OnePoint(half),
            vec![PI, PI],
            vec![vec![1.0, 0.0], vec![0.0, -1.0]],
            2,
        ),
        (
            "projective",
            ChainState::Projective(ProjectiveState::new(half, [0.0, 1.0])?),
            vec![PI; 4],
            vec![
                vec![1.0, 0.0, -1.0, 0.0],
                vec![0.0, -1.0, 0.0, 1.0],
                vec![0.0, -PI, 0.0, 0.0],
                vec![0.0; 4],
            ],
            3,
        ),
        (
            "two-point",
            ChainState::TwoPoint(TwoPointState::new(
                TorusPoint::new(0.0, FRAC_PI_2),
                TorusPoint::new(FRAC_PI_2, 0.0),
            )?),
            vec![PI; 4],
            vec![
                vec![1.0, 0.0, 1.0, 0.0],
                vec![0.0, 0.0, PI, 0.0],
                vec![0.0, -PI, 0.0, 0.0],
                vec![0.0, 1.0, 0.0, 1.0],
            ],
            4,
        ),
    ])
}

fn rows(m: &[Vec<f64>]) -> Vec<&[f64]> {
    m.iter().map(|r| r.as_slice()).collect()
}

pub fn rank_check(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Report> {
    let mut r = Report::default();
    let mut reports: Vec<(&str, RankReport)> = Vec::new();
    for (name, chain, taus, expected, rank) in small_set_cases()? {
        let rep = jacobian_wrt_schedule(chain, &taus, cfg.rank.h)?;
        let err = rep.max_abs_diff(&rows(&expected));
        r.check(Check::new(
            format!("rank-check {name}"),
            err <= MATRIX_TOL && rep.rank == rank,
            format!("rank {}, max entry error {}", rep.rank, sci(err)),
            format!("rank {rank}, error <= {MATRIX_TOL}"),
        ));
        reports.push((name, rep));
    }
    let map: std::collections::BTreeMap<&str, &RankReport> = reports.iter().map(|(n, rep)| (*n, rep)).collect();
    out.json("rank_check.json", &map)?;
    Ok(r)
}

pub fn furstenberg(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Report> {
    let x = TorusPoint::new(FRAC_PI_2, FRAC_PI_2);
    let taus = [FRAC_PI_2, PI, PI, PI, FRAC_PI_2, FRAC_PI_2];
    let (first, second) = furstenberg_check(x, &taus, cfg.furstenberg.h)?;
    let expected = [vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, PI, 0.0, 0.0, 1.0]];
    let err = first.max_abs_diff(&rows(&expected));

    #[derive(Serialize)]
    struct Out<'a> {
        point: [f64; 2],
        tau_star: [f64; 6],
        first_derivative: &'a RankReport,
        restricted_second_derivative: &'a RankReport,
    }
    out.json(
        "furstenberg.json",
        &Out {
            point: x.to_array(),
            tau_star: taus,
            first_derivative: &first,
            restricted_second_derivative: &second,
        },
    )?;
    let mut r = Report::default();
    r.check(Check::new(
        "furstenberg: first derivative matrix",
        err <= MATRIX_TOL && first.rank == 2,
        format!("rank {}, max entry error {}", first.rank, sci(err)),
        format!("[[1,0,1,0,1,0],[0,0,pi,0,0,1]] within {MATRIX_TOL}, rank 2"),
    ));
    r.check(Check::new(
        "furstenberg: kernel-restricted second derivative",
        second.rank == 3,
        format!("rank {}, singular values {:?}", second.rank, second.singular_values.iter().map(|s| sci(*s)).collect::<Vec<_>>()),
        "rank 3",
    ));
    Ok(r)
}

pub fn steer(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Report> {
    let c = &cfg.steer;
    let s = replicate_seed(cfg.seed, tag::STEER, 0);
    let target = TorusPoint::new(FRAC_PI_2, FRAC_PI_2);

    #[derive(Serialize)]
    struct Projective {
        start: [f64; 4],
        n_pairs: Option<usize>,
        landing_error: Option<f64>,
        error: Option<String>,
    }
    #[derive(Serialize)]
    struct TwoPoint {
        start: [f64; 4],
        target: [f64; 4],
        n_pairs: Option<usize>,
        evaluations: Option<u64>,
        perturbed: Option<bool>,
        final_distance: Option<f64>,
        error: Option<String>,
    }

    let projective: Vec<Projective> = (0..c.n_starts)
        .into_par_iter()
        .map(|k| {
            let mut rng = seed::stream_rng(s, k as u64);
            let st = ProjectiveState::from_angle(TorusPoint::random(&mut rng), rng.random::<f64>() * 2.0 * PI);
            match steer_projective(st, ProjectiveTarget::E3) {
                Ok(sched) => {
                    let (q, m) = tangent_flow(st.x(), &sched);
                    let end = ProjectiveState::new(q, m.apply(st.v()));
                    let ok = end.map(|e| in_target(&e, ProjectiveTarget::E3)).unwrap_or(false);
                    Projective {
                        start: st.to_array(),
                        n_pairs: Some(sched.n_pairs()),
                        landing_error: Some(if ok { q.dist(&target) } else { f64::INFINITY }),
                        error: None,
                    }
                }
                Err(e) => Projective {
                    start: st.to_array(),
                    n_pairs: None,
                    landing_error: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let two_point: Vec<TwoPoint> = (0..c.n_starts)
        .into_par_iter()
        .map(|k| {
            let mut rng = seed::stream_rng(s, (c.n_starts + k) as u64);
            let mut pair = || loop {
                let a = TorusPoint::random(&mut rng);
                let b = TorusPoint::random(&mut rng);
                if let Ok(p) = TwoPointState::new(a, b) {
                    break p;
                }
            };
            let (start, goal) = (pair(), pair());
            match steer_two_point(start, goal, c.radius, c.budget) {
                Ok(res) => {
                    // independent replay of the returned schedule
                    let end = TwoPointState::new(flow(start.x(), &res.schedule), flow(start.y(), &res.schedule));
                    TwoPoint {
                        start: start.to_array(),
                        target: goal.to_array(),
                        n_pairs: Some(res.schedule.n_pairs()),
                        evaluations: Some(res.evaluations),
                        perturbed: Some(res.perturbed),
                        final_distance: Some(end.map(|e| e.dist(&goal)).unwrap_or(f64::INFINITY)),
                        error: None,
                    }
                }
                Err(e) => TwoPoint {
                    start: start.to_array(),
                    target: goal.to_array(),
                    n_pairs: None,
                    evaluations: None,
                    perturbed: None,
                    final_distance: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    #[derive(Serialize)]
    struct Out<'a> {
        projective: &'a [Projective],
        two_point: &'a [TwoPoint],
        radius: f64,
        budget: u64,
    }
    out.json(
        "steer.json",
        &Out {
            projective: &projective,
            two_point: &two_point,
            radius: c.radius,
            budget: c.budget,
        },
    )?;

    let mut r = Report::default();
    let landed = projective
        .iter()
        .filter(|p| p.landing_error.is_some_and(|e| e <= STEER_LANDING_TOL))
        .count();
    let worst = projective.iter().filter_map(|p| p.landing_error).fold(0.0, f64::max);
    r.check(Check::new(
        "steer: projective starts reach (pi/2, pi/2) with vertical direction",
        landed == projective.len(),
        format!("{landed}/{} landed, worst error {}", projective.len(), sci(worst)),
        format!("all within {STEER_LANDING_TOL:e}"),
    ));
    let reached = two_point
        .iter()
        .filter(|t| t.final_distance.is_some_and(|d| d <= c.radius) && t.evaluations.is_some_and(|e| e <= c.budget))
        .count();
    let max_eval = two_point.iter().filter_map(|t| t.evaluations).max().unwrap_or(0);
    r.check(Check::new(
        "steer: two-point targets reached within budget",
        reached == two_point.len(),
        format!("{reached}/{} reached, max evaluations {max_eval}", two_point.len()),
        format!("all within radius {} using <= {} evaluations", c.radius, c.budget),
    ));
    for t in two_point.iter().filter_map(|t| t.error.as_ref()) {
        r.note(format!("steer two-point: {t}"));
    }
    Ok(r)
}

pub fn energy(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Report> {
    let c = &cfg.energy;
    let opts = c.refinement();
    let mut r = Report::default();
    let mut series: Vec<EnergySeries> = Vec::new();
    let mut overflowed = Vec::new();

    #[derive(Serialize)]
    struct Replicate {
        schedule_seed: u64,
        quadrature_seed: u64,
        pairs_completed: usize,
        c_hat: f64,
        e0: f64,
        e0_std_error: f64,
        max_vertices: usize,
        failure: Option<String>,
    }
    let mut reps = Vec::new();
    for k in 0..c.replicates {
        let s = replicate_seed(cfg.seed, tag::ENERGY, k as u64);
        let q = seed::derive(s, 1);
        let sched = make_schedule(Provenance::RandomUniform { t_max: c.t_max, seed: s }, c.n_pairs)?;
        let (es, failure) = energy_series_partial(&sched, c.n_quad, q, &opts)?;
        out.write_with(&format!("energy_{k}.csv"), |w| es.write_csv(w))?;
        if k == 0 && c.svg_pairs > 0 {
            let prefix = sched.prefix(c.svg_pairs.min(c.n_pairs).min(es.rows.len() - 1));
            let loops = push_boundary(&prefix, &opts)?;
            out.write_with("loops.svg", |w| write_loops_svg(&loops, w, 512.0))?;
        }
        let pairs_completed = es.rows.len() - 1;
        if let Some(e) = &failure {
            let msg = format!("energy replicate {k}: stopped after {pairs_completed} of {} pairs: {e}", c.n_pairs);
            r.fail(msg);
            overflowed.push(k);
        }
        reps.push(Replicate {
            schedule_seed: s,
            quadrature_seed: q,
            pairs_completed,
            c_hat: es.c_hat,
            e0: es.rows[0].e,
            e0_std_error: es.rows[0].std_err,
            max_vertices: es.rows.iter().map(|row| row.vertices).max().unwrap_or(0),
            failure: failure.map(|e| e.to_string()),
        });
        series.push(es);
    }

    r.check(Check::new(
        "energy: boundary refinement within the vertex budget",
        overflowed.is_empty(),
        format!(
            "{}/{} replicates completed {} pairs",
            c.replicates - overflowed.len(),
            c.replicates,
            c.n_pairs
        ),
        format!("every replicate within {} vertices per loop", c.vertex_budget),
    ));

    // (E_n - E_0) / cum grad against the Lipschitz bound pi/4, with the
    // Monte Carlo error of the difference
    let mut c_hat: f64 = 0.0;
    let mut worst_excess = f64::NEG_INFINITY;
    for es in &series {
        let e0 = &es.rows[0];
        for row in es.rows.iter().filter(|row| row.cum_grad_l1 > 0.0) {
            let ratio = (row.e - e0.e) / row.cum_grad_l1;
            let se = row.std_err.hypot(e0.std_err) / row.cum_grad_l1;
            c_hat = c_hat.max(ratio);
            worst_excess = worst_excess.max(ratio - FRAC_PI_4 - 3.0 * se);
        }
    }
    let completed_rows: usize = series.iter().map(|es| es.rows.len() - 1).sum();
    r.check(Check::new(
        "energy: growth ratio bounded by one constant",
        completed_rows > 0 && worst_excess <= 0.0,
        format!("C_hat {c_hat:.5} over {completed_rows} steps of {} replicates", series.len()),
        format!("<= pi/4 = {FRAC_PI_4:.5} (+ 3 SE)"),
    ));

    let exact = strip_energy_exact();
    let n = series.len() as f64;
    let pooled = series.iter().map(|es| es.rows[0].e).sum::<f64>() / n;
    let pooled_se = series.iter().map(|es| es.rows[0].std_err.powi(2)).sum::<f64>().sqrt() / n;
    r.check(Check::new(
        "energy: E_0 matches the closed form",
        (pooled - exact).abs() <= 3.0 * pooled_se,
        format!("{pooled:.4} +- {pooled_se:.4}"),
        format!("{exact:.4} within 3 SE"),
    ));

    #[derive(Serialize)]
    struct Summary<'a> {
        c_hat: f64,
        e0_exact: f64,
        e0_pooled: f64,
        e0_pooled_std_error: f64,
        replicates: &'a [Replicate],
    }
    out.json(
        "energy_summary.json",
        &Summary {
            c_hat,
            e0_exact: exact,
            e0_pooled: pooled,
            e0_pooled_std_error: pooled_se,
            replicates: &reps,
        },
    )?;
    Ok(r)
}

pub fn clump(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Report> {
    let c = &cfg.clump;
    let table = clump_radius(c.n_steps, c.h, c.t_max, c.boundary_points)?;
    out.write_with("clump_table.csv", |w| table.write_csv(w))?;
    let c1 = displacement_constant(c.h, c.t_max, c.n_radii, c.n_angles)?;
    let c2 = displacement_constant(c.h, c.t_max, c.n_radii, 2 * c.n_angles)?;

    let n_pairs = c.windows.iter().map(|w| w[1]).max().unwrap_or(1);
    let windows: Vec<FitWindow> = c
        .windows
        .iter()
        .map(|w| FitWindow::new(w[0], w[1]))
        .collect::<Result<_>>()?;
    let sched = make_schedule(Provenance::ConstantDeterministic { t_max: c.t_max }, n_pairs)?;
    let opts = MixOptions {
        threshold: 1.0,
        geometric: false,
        window: Some(windows[0]),
    };
    let report = mix_series(InitialData::BressanStripe, &sched, c.resolution, &opts)?;
    out.write_with("clump_mix.csv", |w| report.write_csv(w))?;
    let slopes: Vec<Option<f64>> = windows
        .iter()
        .map(|&w| report.fit(Metric::HMinusOne, Axis::Step, w).map(|f| f.slope))
        .collect();

    let inf = table.inf_n_r();
    let lower = c.h / (E * c2);
    #[derive(Serialize)]
    struct Summary<'a> {
        h: f64,
        #[serde(rename = "T")]
        t_max: f64,
        inf_n_r_n: f64,
        ball_bound: f64,
        displacement_constant: f64,
        displacement_constant_doubled: f64,
        windows: &'a [[usize; 2]],
        window_slopes: &'a [Option<f64>],
    }
    out.json(
        "clump.json",
        &Summary {
            h: c.h,
            t_max: c.t_max,
            inf_n_r_n: inf,
            ball_bound: lower,
            displacement_constant: c1,
            displacement_constant_doubled: c2,
            windows: &c.windows,
            window_slopes: &slopes,
        },
    )?;

    let mut r = Report::default();
    r.check(Check::new(
        "clump: algebraic shrinkage",
        inf > 0.0 && inf >= lower,
        format!("inf n r_n = {inf:.5} over n <= {}", c.n_steps),
        format!("> 0 and >= h / (e C) = {lower:.5}"),
    ));
    let rel = (c2 - c1).abs() / c1.abs();
    r.check(Check::new(
        "clump: displacement constant finite and stable",
        c1.is_finite() && c2.is_finite() && rel <= CLUMP_STABILITY_TOL,
        format!("C = {c1:.5}, doubled samples {c2:.5}"),
        format!("finite, relative change <= {CLUMP_STABILITY_TOL}"),
    ));
    let mags: Vec<f64> = slopes.iter().map(|s| s.map_or(f64::NAN, f64::abs)).collect();
    let decreasing = mags.windows(2).all(|w| w[1] < w[0]);
    r.check(Check::new(
        "clump: windowed H^-1 decay slows",
        decreasing,
        format!(
            "slopes {}",
            slopes
                .iter()
                .zip(&c.windows)
                .map(|(s, w)| format!("[{},{}]: {}", w[0], w[1], s.map_or("none".into(), |v| format!("{v:+.5}"))))
                .collect::<Vec<_>>()
                .join(", ")
        ),
        "|slope| strictly decreasing across windows",
    ));
    Ok(r)
}

/// Pair counts at which the round trip and the determinant are profiled.
const PROFILE_PAIRS: [usize; 10] = [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000];

/// Largest profiled pair count up to which every entry of `worst` is within
/// `tol`.
fn holds_up_to(profile: &[(usize, f64)], tol: f64) -> Option<usize> {
    profile.iter().take_while(|(_, e)| *e <= tol).last().map(|(n, _)| *n)
}

fn max_profile(a: Vec<(usize, f64)>, b: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    if a.is_empty() {
        return b;
    }
    a.into_iter().zip(b).map(|((n, x), (_, y))| (n, x.max(y))).collect()
}

fn nan_to_inf(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x
    }
}

/// Inverse round trip, tangent determinant and finite-difference Jacobian
/// over random points and schedules, plus the fixed set.
pub fn exactness(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Report> {
    let c = &cfg.exactness;
    let s = replicate_seed(cfg.seed, tag::EXACTNESS, 0);
    let random = |stream: u64, i: usize, n_pairs: usize| {
        make_schedule(
            Provenance::RandomUniform {
                t_max: c.t_max,
                seed: seed::derive(seed::derive(s, stream), i as u64),
            },
            n_pairs,
        )
    };
    let rt_marks: Vec<usize> = PROFILE_PAIRS.iter().copied().filter(|&n| n < c.round_trip_pairs).chain([c.round_trip_pairs]).collect();
    let det_marks: Vec<usize> = PROFILE_PAIRS.iter().copied().filter(|&n| n < c.det_pairs).chain([c.det_pairs]).collect();

    // worst errors at each profiled pair count, reduced in index order
    let (rt_profile, det_profile) = (0..c.n_points)
        .into_par_iter()
        .map(|i| -> Result<(Profile, Profile)> {
            let mut rng = seed::stream_rng(s, i as u64);
            let p = TorusPoint::random(&mut rng);
            let sched = random(1, i, c.round_trip_pairs)?;
            let rt = rt_marks
                .iter()
                .map(|&n| {
                    let pre = sched.prefix(n);
                    let e = flow_inverse(flow(p, &pre), &pre).dist(&p).max(flow(flow_inverse(p, &pre), &pre).dist(&p));
                    (n, nan_to_inf(e))
                })
                .collect();
            let sched = random(2, i, c.det_pairs)?;
            let mut det = Vec::with_capacity(det_marks.len());
            let (mut q, mut m) = (p, Jacobian2::IDENTITY);
            let mut marks = det_marks.iter().peekable();
            for (k, st) in sched.steps().iter().enumerate() {
                m = jacobian_step(q, *st).mul(&m);
                q = apply_step(q, *st);
                if k % 2 == 1 && marks.peek() == Some(&&(k / 2 + 1)) {
                    det.push((k / 2 + 1, nan_to_inf((m.det() - 1.0).abs())));
                    marks.next();
                }
            }
            Ok((rt, det))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((Vec::new(), Vec::new()), |(ra, da), (rb, db)| (max_profile(ra, rb), max_profile(da, db)));

    let h = c.fd_step;
    let fd_worst = (0..c.fd_cases)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = seed::stream_rng(seed::derive(s, 3), i as u64);
            let p = TorusPoint::random(&mut rng);
            let th = rng.random::<f64>() * 2.0 * PI;
            let v = [th.cos(), th.sin()];
            let sched = random(3, i, c.fd_pairs)?;
            let (_, m) = tangent_flow(p, &sched);
            let a = flow(TorusPoint::new(p.x1() + h * v[0], p.x2() + h * v[1]), &sched);
            let b = flow(TorusPoint::new(p.x1() - h * v[0], p.x2() - h * v[1]), &sched);
            let fd = [wrap_signed(a.x1() - b.x1()) / (2.0 * h), wrap_signed(a.x2() - b.x2()) / (2.0 * h)];
            let an = m.apply(v);
            Ok(nan_to_inf((fd[0] - an[0]).hypot(fd[1] - an[1]) / an[0].hypot(an[1])))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let mut fixed_ok = true;
    for i in 0..100 {
        let sched = random(4, i, c.det_pairs)?;
        for f in FIXED_SET {
            fixed_ok &= flow(f, &sched) == f && flow_inverse(f, &sched) == f && is_fixed_point(&flow(f, &sched));
        }
    }

    let rt_worst = rt_profile.last().map_or(f64::INFINITY, |e| e.1);
    let det_worst = det_profile.last().map_or(f64::INFINITY, |e| e.1);
    #[derive(Serialize)]
    struct Out<'a> {
        n_points: usize,
        #[serde(rename = "T")]
        t_max: f64,
        round_trip_profile: &'a [(usize, f64)],
        det_profile: &'a [(usize, f64)],
        fd_cases: usize,
        fd_pairs: usize,
        fd_step: f64,
        max_fd_rel_error: f64,
        fixed_set_exact: bool,
    }
    // JSON has no infinity; non-finite errors are written as null
    out.json(
        "exactness.json",
        &Out {
            n_points: c.n_points,
            t_max: c.t_max,
            round_trip_profile: &rt_profile,
            det_profile: &det_profile,
            fd_cases: c.fd_cases,
            fd_pairs: c.fd_pairs,
            fd_step: h,
            max_fd_rel_error: fd_worst,
            fixed_set_exact: fixed_ok,
        },
    )?;

    let mut r = Report::default();
    let upto = |n: Option<usize>| n.map_or("no profiled count".to_string(), |n| format!("{n} pairs"));
    r.check(Check::new(
        "exactness: inverse-flow round trip",
        rt_worst <= ROUND_TRIP_TOL,
        format!("{} after {} pairs", sci(rt_worst), c.round_trip_pairs),
        format!("<= {ROUND_TRIP_TOL:e}"),
    ));
    r.note(format!(
        "exactness: round trip within {ROUND_TRIP_TOL:e} up to {} (T = {})",
        upto(holds_up_to(&rt_profile, ROUND_TRIP_TOL)),
        c.t_max
    ));
    r.check(Check::new(
        "exactness: tangent determinant",
        det_worst <= DET_TOL,
        format!("{} after {} pairs", sci(det_worst), c.det_pairs),
        format!("|det - 1| <= {DET_TOL:e}"),
    ));
    r.note(format!(
        "exactness: |det - 1| within {DET_TOL:e} up to {} (T = {})",
        upto(holds_up_to(&det_profile, DET_TOL)),
        c.t_max
    ));
    r.check(Check::new(
        "exactness: fixed set",
        fixed_ok,
        if fixed_ok { "bitwise fixed" } else { "moved" },
        "bitwise fixed under 100 schedules",
    ));
    r.check(Check::new(
        "exactness: analytic vs finite-difference Jacobian",
        fd_worst <= JACOBIAN_REL_TOL,
        format!("{} over {} cases of {} pairs", sci(fd_worst), c.fd_cases, c.fd_pairs),
        format!("<= {JACOBIAN_REL_TOL:e} relative"),
    ));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decorrelated_floor_matches_random_field() {
        // H^-1 of i.i.d. +-2 values through the spectral routine
        let n = 64;
        let mut rng = seed::stream_rng(3, 0);
        let trials: Vec<f64> = (0..20)
            .map(|_| {
                let v = (0..n * n).map(|_| if rng.random::<bool>() { 2.0 } else { -2.0 }).collect();
                h_minus_one(&ScalarField::from_values(n, v).unwrap().into_mean_zero()).unwrap()
            })
            .collect();
        let mean = trials.iter().sum::<f64>() / trials.len() as f64;
        let predicted = decorrelated_h_minus_one(n, 4.0);
        assert!((mean - predicted).abs() < 0.1 * predicted, "{mean} vs {predicted}");
    }

    #[test]
    fn replicate_seeds_differ() {
        let a: Vec<u64> = (0..5).map(|k| replicate_seed(1, tag::MIX, k)).collect();
        let b: Vec<u64> = (0..5).map(|k| replicate_seed(1, tag::ENERGY, k)).collect();
        assert!(a.iter().all(|x| !b.contains(x)));
        assert_eq!(a, (0..5).map(|k| replicate_seed(1, tag::MIX, k)).collect::<Vec<_>>());
    }
}
