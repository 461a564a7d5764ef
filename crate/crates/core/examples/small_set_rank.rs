//! Finite-difference derivatives of the one-point, projective and two-point
//! chains with respect to the shear magnitudes, and the Furstenberg rank
//! condition at `(pi/2, pi/2)`.
//!
//! ```text
//! cargo run --release --example small_set_rank
//! ```

use std::f64::consts::{FRAC_PI_2, PI};

use shearmix::chains::{furstenberg_check, jacobian_wrt_schedule, ChainState, ProjectiveState, RankReport, TwoPointState};
use shearmix::TorusPoint;

fn show(name: &str, r: &RankReport) {
    println!("{name}: rank {} (singular values {:.4?})", r.rank, r.singular_values);
    for row in &r.matrix {
        println!("  {:>8.4?}", row);
    }
}

fn main() -> shearmix::Result<()> {
    let h = 1e-5;
    let half = TorusPoint::new(FRAC_PI_2, FRAC_PI_2);

    let one = jacobian_wrt_schedule(ChainState::OnePoint(half), &[PI, PI], h)?;
    show("one-point", &one);

    let proj = ProjectiveState::new(half, [0.0, 1.0])?;
    show("projective", &jacobian_wrt_schedule(ChainState::Projective(proj), &[PI; 4], h)?);

    let pair = TwoPointState::new(TorusPoint::new(0.0, FRAC_PI_2), TorusPoint::new(FRAC_PI_2, 0.0))?;
    show("two-point", &jacobian_wrt_schedule(ChainState::TwoPoint(pair), &[PI; 4], h)?);

    let taus = [FRAC_PI_2, PI, PI, PI, FRAC_PI_2, FRAC_PI_2];
    let (first, second) = furstenberg_check(half, &taus, h)?;
    show("furstenberg first derivative", &first);
    show("second derivative on the kernel", &second);
    Ok(())
}
