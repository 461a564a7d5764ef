//! Drive the experiment runner from code: parse a configuration with
//! overrides, run one subcommand, and check the manifest digests.
//!
//! ```text
//! cargo run --release --example run_config -- [out_dir]
//! ```

use std::path::Path;

use shearmix::experiment::{run, ExperimentConfig, RunManifest, RunOptions};

fn main() -> shearmix::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/rank-check".to_string());
    let text = "subcommand = \"rank-check\"\n[rank]\nh = 1e-5\n";
    let cfg = match ExperimentConfig::load(Some(text), &[format!("out = \"{out}\""), "seed = 7".into()]) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config rejected: {e}");
            std::process::exit(2);
        }
    };
    let outcome = run(&cfg, RunOptions { workers: None, serial: true }, &mut |line| println!("{line}"))?;
    println!("exit code {}", outcome.exit_code());

    let manifest = RunManifest::read(Path::new(&out))?;
    for f in &manifest.files {
        println!("{} {} bytes sha256 {}", f.path, f.bytes, f.sha256);
    }
    println!("stale files: {:?}", manifest.verify(Path::new(&out)));

    match ExperimentConfig::load(Some("[rank]\nstep = 1e-5\n"), &[]) {
        Ok(_) => println!("unexpected: misspelled key accepted"),
        Err(e) => println!("misspelled key rejected: {e}"),
    }
    Ok(())
}
