//! Advect the stripe by random shear pairs and watch its `H^{-1}` norm and
//! geometric mixing scale decay.
//!
//! ```text
//! cargo run --release --example mixing_decay -- [seed] [n_pairs] [resolution] [T]
//! ```

use std::time::Instant;

use shearmix::transport::{mix_series, Axis, InitialData, Metric, MixOptions};
use shearmix::{make_schedule, Provenance};

fn main() -> shearmix::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: &str| args.get(i).cloned().unwrap_or_else(|| d.to_string());
    let seed: u64 = arg(0, "1").parse().expect("seed");
    let n_pairs: usize = arg(1, "12").parse().expect("n_pairs");
    let n: usize = arg(2, "256").parse().expect("resolution");
    let t_max: f64 = arg(3, "20").parse().expect("T");

    let sched = make_schedule(Provenance::RandomUniform { t_max, seed }, n_pairs)?;
    let start = Instant::now();
    let report = mix_series(InitialData::BressanStripe, &sched, n, &MixOptions::default())?;

    println!("{:>3} {:>12} {:>12} {:>10}", "n", "cum_grad", "H^-1", "geom");
    for r in &report.rows {
        println!(
            "{:>3} {:>12.2} {:>12.5e} {:>10.5}",
            r.n,
            r.cum_grad_l1,
            r.h_minus_one,
            r.geom_scale.unwrap_or(f64::NAN)
        );
    }
    for (name, f) in [
        ("log H^-1 vs n", &report.fits.log_h_minus_one_vs_n),
        ("log geom vs n", &report.fits.log_geom_scale_vs_n),
    ] {
        if let Some(f) = f {
            println!("{name}: slope {:+.4}, R^2 {:.3} over [{}, {}]", f.slope, f.r2, f.window.start, f.window.end);
        }
    }
    // the first few steps, before the grid stops resolving the filaments
    if n_pairs >= 4 {
        let w = shearmix::transport::FitWindow::new(0, 3)?;
        if let Some(f) = report.fit(Metric::HMinusOne, Axis::Step, w) {
            println!("log H^-1 vs n over [0, 3]: slope {:+.4}, R^2 {:.3}", f.slope, f.r2);
        }
    }
    eprintln!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
