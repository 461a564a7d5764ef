use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use shearmix::experiment::{run, write_error_record, ConfigError, ErrorRecord, ExperimentConfig, RunOptions, Subcommand};

/// Alternating sine shears on the torus: transport, chains and energy
/// experiments with pass/fail checks.
#[derive(Parser, Debug)]
#[command(version)]
struct Cli {
    /// simulate, mix-series, lyapunov, drift-sweep, rank-check, furstenberg,
    /// steer, energy-series, clump or verify-all (default: from the config,
    /// else verify-all)
    subcommand: Option<String>,
    /// TOML configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a key, e.g. `--set mix.resolution=256` (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<String>,
    /// Worker threads
    #[arg(long)]
    workers: Option<usize>,
    /// Single worker and no timing in the manifest (byte-identical reruns)
    #[arg(long)]
    serial: bool,
    /// Print the resolved configuration as TOML and exit
    #[arg(long)]
    print_config: bool,
}

fn fail(rec: ErrorRecord, out: Option<&Path>) -> ExitCode {
    eprintln!("{}", rec.to_json());
    if let Some(dir) = out {
        write_error_record(dir, &rec);
    }
    ExitCode::from(rec.exit_code as u8)
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let text = match &cli.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| ConfigError {
            key: None,
            message: format!("cannot read {}: {e}", p.display()),
        })?),
        None => None,
    };
    let mut overrides = Vec::new();
    if let Some(s) = &cli.subcommand {
        let sub: Subcommand = s.parse()?;
        overrides.push(format!("subcommand=\"{sub}\""));
    }
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(out) = &cli.out {
        overrides.push(format!("out={}", toml::Value::String(out.clone())));
    }
    overrides.extend(cli.set.iter().cloned());
    ExperimentConfig::load(text.as_deref(), &overrides)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => return fail(ErrorRecord::config(&e), None),
    };
    if cli.print_config {
        print!("{}", cfg.to_toml());
        return ExitCode::SUCCESS;
    }
    let opts = RunOptions {
        workers: cli.workers,
        serial: cli.serial,
    };
    match run(&cfg, opts, &mut |line| println!("{line}")) {
        Ok(outcome) => match outcome.error_record() {
            Some(rec) => fail(rec, Some(Path::new(&cfg.out))),
            None => ExitCode::from(outcome.exit_code() as u8),
        },
        Err(e) => fail(ErrorRecord::runtime(&e), Some(Path::new(&cfg.out))),
    }
}
