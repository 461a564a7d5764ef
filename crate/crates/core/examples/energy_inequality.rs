//! Track the log-distance energy of the strip under a random schedule and
//! compare its growth with the cumulative velocity-gradient norm.
//!
//! ```text
//! cargo run --release --example energy_inequality -- [seed] [n_pairs] [n_quad] [vertex_budget]
//! ```

use std::f64::consts::PI;
use std::time::Instant;

use shearmix::energy::{energy_series_partial, strip_energy_exact, RefinementOptions};
use shearmix::{make_schedule, seed, Provenance};

fn main() -> shearmix::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let seed = args.first().copied().unwrap_or(1);
    let n_pairs = args.get(1).copied().unwrap_or(10) as usize;
    let n_quad = args.get(2).copied().unwrap_or(100_000) as usize;

    let mut opts = RefinementOptions::default();
    if let Some(&b) = args.get(3) {
        opts.vertex_budget = b as usize;
    }

    let sched = make_schedule(Provenance::RandomUniform { t_max: 5.0, seed }, n_pairs)?;
    let start = Instant::now();
    let (series, failure) = energy_series_partial(&sched, n_quad, seed::derive(seed, 1), &opts)?;

    println!("closed-form E_0 = {:.4}", strip_energy_exact());
    println!("{:>3} {:>10} {:>8} {:>12} {:>9} {:>9}", "n", "E", "se", "cum_grad", "ratio", "vertices");
    let e0 = series.rows[0].e;
    for r in &series.rows {
        let ratio = if r.cum_grad_l1 > 0.0 { (r.e - e0) / r.cum_grad_l1 } else { 0.0 };
        println!(
            "{:>3} {:>10.4} {:>8.4} {:>12.2} {:>9.5} {:>9}",
            r.n, r.e, r.std_err, r.cum_grad_l1, ratio, r.vertices
        );
    }
    // each shear and its inverse are (1 + tau)-Lipschitz, which bounds the
    // ratio by area(L) / (8 pi) = pi / 4
    println!("C_hat = {:.5} (Lipschitz bound {:.5})", series.c_hat, PI / 4.0);
    if let Some(e) = failure {
        println!("stopped after {} pairs: {e}", series.rows.len() - 1);
    }
    eprintln!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
