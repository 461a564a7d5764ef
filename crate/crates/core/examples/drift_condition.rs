//! Monte Carlo drift ratio `E[V(next)] / V(x)` for `V = dist_inf(x, F)^(-alpha)`
//! near the fixed point `(0, 0)`.
//!
//! ```text
//! cargo run --release --example drift_condition -- [n_mc] [T] [alpha]
//! ```

use shearmix::chains::{default_r0, drift_sweep, DriftGrid, DriftParams};
use shearmix::wrap_signed;

fn main() -> shearmix::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n_mc: usize = args.first().map_or(100_000, |s| s.parse().expect("n_mc"));
    let t_max: f64 = args.get(1).map_or(5e5, |s| s.parse().expect("T"));
    let alpha: f64 = args.get(2).map_or(0.05, |s| s.parse().expect("alpha"));

    let params = DriftParams {
        alpha,
        t_max,
        r0: default_r0(t_max),
        n_mc,
        seed: 1,
    };
    let sweep = drift_sweep(&params, &DriftGrid::default())?;
    println!("{:>12} {:>12} {:>9} {:>9}", "x1", "x2", "ratio", "se");
    for r in &sweep.rows {
        println!(
            "{:>12.3e} {:>12.3e} {:>9.5} {:>9.2e}",
            wrap_signed(r.point.x1()),
            wrap_signed(r.point.x2()),
            r.ratio,
            r.std_error
        );
    }
    if let Some(w) = sweep.worst() {
        println!("worst ratio {:.5} +- {:.2e} over {} points", w.ratio, w.std_error, sweep.rows.len());
    }
    Ok(())
}
