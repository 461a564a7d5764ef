//! Constant magnitudes `T = 2 pi`: the ball around `(pi/2, pi/2)` that stays
//! within `h` shrinks only like `1/n`, and the stripe mixes slowly.
//!
//! ```text
//! cargo run --release --example clump -- [n_steps] [h]
//! ```

use std::f64::consts::{E, TAU};

use shearmix::transport::{clump_radius, displacement_constant};

fn main() -> shearmix::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n_steps: usize = args.first().map_or(40, |s| s.parse().expect("n_steps"));
    let h: f64 = args.get(1).map_or(0.1, |s| s.parse().expect("h"));

    let table = clump_radius(n_steps, h, TAU, 4096)?;
    println!("{:>4} {:>10} {:>8}", "n", "r_n", "n r_n");
    for r in table.rows.iter().filter(|r| r.n > 0 && (r.n <= 5 || r.n % 5 == 0)) {
        println!("{:>4} {:>10.6} {:>8.5}", r.n, r.r_n, r.n as f64 * r.r_n);
    }
    let c = displacement_constant(h, TAU, 16, 4096)?;
    println!("inf n r_n = {:.5}, C = {c:.5}, h / (e C) = {:.5}", table.inf_n_r(), h / (E * c));
    Ok(())
}
