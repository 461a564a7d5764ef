use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{invalid, Result};
use crate::flow::{make_schedule, tangent_flow_magnitudes, Provenance, Schedule, TorusPoint, FIXED_SET};
use crate::seed;
use crate::stats::Accumulator;

/// Starting points closer than this to the fixed set are redrawn.
pub const START_EXCLUSION: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub lambda1_hat: f64,
    pub std_error: f64,
    pub n_steps: usize,
    pub n_samples: usize,
    #[serde(rename = "T")]
    pub t_max: f64,
    pub seed: u64,
}

/// `(1 / n_pairs) * log |D Phi_n(x) v|` along one schedule, renormalizing
/// the tangent vector after every pair.
pub fn finite_time_exponent(x: TorusPoint, v: [f64; 2], sched: &Schedule) -> f64 {
    let n = sched.n_pairs();
    if n == 0 {
        return 0.0;
    }
    let taus = sched.magnitudes();
    let mut p = x;
    let norm = v[0].hypot(v[1]);
    let mut w = [v[0] / norm, v[1] / norm];
    let mut acc = 0.0;
    for pair in taus.chunks_exact(2) {
        let (q, m) = tangent_flow_magnitudes(p, pair);
        let u = m.apply(w);
        let len = u[0].hypot(u[1]);
        acc += len.ln();
        w = [u[0] / len, u[1] / len];
        p = q;
    }
    acc / n as f64
}

fn random_start(rng: &mut seed::StreamRng) -> TorusPoint {
    loop {
        let p = TorusPoint::random(rng);
        if FIXED_SET.iter().all(|q| p.dist(q) >= START_EXCLUSION) {
            return p;
        }
    }
}

/// Monte Carlo estimate of the top Lyapunov exponent per pair-step.
///
/// Sample `i` draws its start point and direction from stream `i` of `seed`
/// and its schedule from `seed::derive(seed, i)`, so the estimate does not
/// depend on the thread count.
pub fn lyapunov_exponent(t_max: f64, n_steps: usize, n_samples: usize, seed: u64) -> Result<LyapunovEstimate> {
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(invalid(format!("T must be > 0, got {t_max}")));
    }
    if n_steps < 10 {
        return Err(invalid("n_steps must be at least 10"));
    }
    if n_samples < 2 {
        return Err(invalid("n_samples must be at least 2"));
    }
    let values: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::stream_rng(seed, i);
            let x = random_start(&mut rng);
            let theta = rng.random::<f64>() * TAU;
            let sched = make_schedule(
                Provenance::RandomUniform {
                    t_max,
                    seed: seed::derive(seed, i),
                },
                n_steps,
            )
            .expect("validated parameters");
            finite_time_exponent(x, [theta.cos(), theta.sin()], &sched)
        })
        .collect();
    let mut acc = Accumulator::default();
    values.iter().for_each(|&v| acc.push(v));
    Ok(LyapunovEstimate {
        lambda1_hat: acc.mean(),
        std_error: acc.std_error(),
        n_steps,
        n_samples,
        t_max,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn zero_schedule_is_exactly_neutral() {
        let s = Schedule::from_magnitudes(&[0.0; 40]).unwrap();
        assert_eq!(finite_time_exponent(TorusPoint::new(1.0, 2.0), [0.6, 0.8], &s), 0.0);
    }

    #[test]
    fn neutral_at_clump_center() {
        let s = make_schedule(Provenance::ConstantDeterministic { t_max: TAU }, 50).unwrap();
        let p = TorusPoint::new(FRAC_PI_2, FRAC_PI_2);
        assert!(finite_time_exponent(p, [1.0, 0.0], &s).abs() < 1e-12);
        assert!(finite_time_exponent(p, [0.0, 1.0], &s).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(lyapunov_exponent(0.0, 100, 10, 1).is_err());
        assert!(lyapunov_exponent(1.0, 9, 10, 1).is_err());
        assert!(lyapunov_exponent(1.0, 10, 1, 1).is_err());
    }

    #[test]
    fn small_run_is_positive_and_deterministic() {
        let a = lyapunov_exponent(20.0, 100, 64, 5).unwrap();
        let b = lyapunov_exponent(20.0, 100, 64, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.lambda1_hat - 3.0 * a.std_error > 0.0, "{a:?}");
    }
}
