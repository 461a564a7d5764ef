//! Top Lyapunov exponent of the random shear flow with `T` uniform
//! magnitudes, with the zero-magnitude control.
//!
//! ```text
//! cargo run --release --example lyapunov -- [T] [n_steps] [n_samples] [seed]
//! ```

use shearmix::chains::{finite_time_exponent, lyapunov_exponent};
use shearmix::{Schedule, TorusPoint};

fn main() -> shearmix::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let t_max: f64 = args.first().map_or(20.0, |s| s.parse().expect("T"));
    let n_steps: usize = args.get(1).map_or(1000, |s| s.parse().expect("n_steps"));
    let n_samples: usize = args.get(2).map_or(200, |s| s.parse().expect("n_samples"));
    let seed: u64 = args.get(3).map_or(1, |s| s.parse().expect("seed"));

    let est = lyapunov_exponent(t_max, n_steps, n_samples, seed)?;
    println!(
        "T = {t_max}: lambda1 = {:.4} +- {:.4} over {n_samples} trajectories of {n_steps} pairs",
        est.lambda1_hat, est.std_error
    );
    for t in [1.0, 2.0, 5.0, 10.0] {
        let e = lyapunov_exponent(t, 200, 50, seed)?;
        println!("T = {t:>4}: lambda1 = {:.4} +- {:.4}", e.lambda1_hat, e.std_error);
    }

    let zero = Schedule::from_magnitudes(&vec![0.0; 2 * n_steps])?;
    println!("zero schedule: {}", finite_time_exponent(TorusPoint::new(1.0, 2.0), [0.6, 0.8], &zero));
    Ok(())
}
