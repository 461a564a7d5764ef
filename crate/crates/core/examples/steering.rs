//! Explicit controls: steer a tangent direction onto the vertical at
//! `(pi/2, pi/2)`, and a pair of points near a chosen target pair.
//!
//! ```text
//! cargo run --release --example steering -- [seed]
//! ```

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use shearmix::chains::{steer_projective, steer_two_point, ProjectiveState, ProjectiveTarget, TwoPointState};
use shearmix::{flow, seed, tangent_flow, TorusPoint};

fn main() -> shearmix::Result<()> {
    let master: u64 = std::env::args().nth(1).map_or(1, |s| s.parse().expect("seed"));
    let mut rng = seed::stream_rng(master, 0);

    let start = ProjectiveState::from_angle(TorusPoint::random(&mut rng), rng.random::<f64>() * 6.0);
    let sched = steer_projective(start, ProjectiveTarget::E3)?;
    let (q, m) = tangent_flow(start.x(), &sched);
    let v = m.apply(start.v());
    println!(
        "projective: {} pairs land at ({:.12}, {:.12}), direction ({:.3e}, {:.3})",
        sched.n_pairs(),
        q.x1() - FRAC_PI_2,
        q.x2() - FRAC_PI_2,
        v[0] / v[0].hypot(v[1]),
        v[1] / v[0].hypot(v[1])
    );

    let a = TwoPointState::new(TorusPoint::random(&mut rng), TorusPoint::random(&mut rng))?;
    let b = TwoPointState::new(TorusPoint::random(&mut rng), TorusPoint::random(&mut rng))?;
    let res = steer_two_point(a, b, 1e-2, 1_000_000)?;
    let x = flow(a.x(), &res.schedule);
    let y = flow(a.y(), &res.schedule);
    println!(
        "two-point: {} pairs, {} evaluations, perturbed {}, distance to target {:.3e} ({:.3e}, {:.3e})",
        res.schedule.n_pairs(),
        res.evaluations,
        res.perturbed,
        res.final_distance,
        x.dist(&b.x()),
        y.dist(&b.y())
    );
    Ok(())
}
