//! Experiment runner behind the command line: configuration, subcommands,
//! pass/fail checks and the run manifest.

mod checks;
pub mod commands;
mod config;
mod manifest;

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

pub use checks::*;
pub use config::{
    ClumpConfig, ConfigError, DriftConfig, EnergyConfig, ExactnessConfig, ExperimentConfig, FiniteDifferenceConfig,
    LyapunovConfig, MixConfig, ScheduleKind, SimulateConfig, SteerConfig, Subcommand,
};
pub use manifest::{digest, OutputFile, Outputs, RunManifest, MANIFEST_FILE};

use crate::error::{Error, Result};

/// Exit status of a run whose checks all passed.
pub const EXIT_OK: i32 = 0;
/// At least one check failed.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// The configuration was rejected before anything ran.
pub const EXIT_CONFIG: i32 = 2;
/// A computation stopped with an error.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses rayon's default.
    pub workers: Option<usize>,
    /// One worker, and no wall-clock time in the manifest, so two runs give
    /// identical bytes.
    pub serial: bool,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub report: Report,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if !self.report.failures.is_empty() {
            EXIT_RUNTIME
        } else if self.report.passed() {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        }
    }

    /// Record of the runtime failures, if any experiment stopped with one.
    pub fn error_record(&self) -> Option<ErrorRecord> {
        (!self.report.failures.is_empty()).then(|| ErrorRecord {
            exit_code: EXIT_RUNTIME,
            kind: "runtime".into(),
            key: None,
            message: self.report.failures.join("; "),
        })
    }
}

/// Machine-readable error, printed as JSON on stderr and written to
/// `error.json` when the output directory exists.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorRecord {
    pub exit_code: i32,
    pub kind: String,
    pub key: Option<String>,
    pub message: String,
}

impl ErrorRecord {
    pub fn config(e: &ConfigError) -> Self {
        ErrorRecord {
            exit_code: EXIT_CONFIG,
            kind: "config".into(),
            key: e.key.clone(),
            message: e.message.clone(),
        }
    }

    pub fn runtime(e: &Error) -> Self {
        let kind = match e {
            Error::Config(_) => "config",
            Error::Io(_) | Error::Json(_) => "io",
            _ => "runtime",
        };
        ErrorRecord {
            exit_code: if kind == "config" { EXIT_CONFIG } else { EXIT_RUNTIME },
            kind: kind.into(),
            key: None,
            message: e.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("error record serializes")
    }
}

type Command = fn(&ExperimentConfig, &mut Outputs) -> Result<Report>;

/// Experiments in `verify-all` order with the subdirectory each writes to.
const SUITE: [(&str, Command); 10] = [
    ("exactness", commands::exactness),
    ("simulate", commands::simulate),
    ("rank-check", commands::rank_check),
    ("furstenberg", commands::furstenberg),
    ("lyapunov", commands::lyapunov),
    ("steer", commands::steer),
    ("drift-sweep", commands::drift),
    ("clump", commands::clump),
    ("mix-series", commands::mix),
    ("energy-series", commands::energy),
];

fn command(sub: Subcommand) -> Option<Command> {
    SUITE.iter().find(|(n, _)| *n == sub.name()).map(|(_, c)| *c)
}

/// Run `cfg.subcommand`, writing into `cfg.out`. Each report line is passed
/// to `sink` as soon as its experiment finishes.
pub fn run(cfg: &ExperimentConfig, opts: RunOptions, sink: &mut (dyn FnMut(&str) + Send)) -> Result<RunOutcome> {
    let threads = if opts.serial { Some(1) } else { opts.workers };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_in_pool(cfg, opts, sink))
}

fn run_in_pool(cfg: &ExperimentConfig, opts: RunOptions, sink: &mut (dyn FnMut(&str) + Send)) -> Result<RunOutcome> {
    let start = Instant::now();
    let mut out = Outputs::create(&cfg.out)?;
    let mut report = Report::default();
    let mut step = |name: &str, f: Command, out: &mut Outputs, report: &mut Report| -> Result<()> {
        let r = match f(cfg, out) {
            Ok(r) => r,
            Err(e) => {
                let mut r = Report::default();
                r.fail(format!("{name}: {e}"));
                r
            }
        };
        for line in r.lines() {
            sink(&line);
        }
        report.extend(r);
        Ok(())
    };
    match cfg.subcommand {
        Subcommand::VerifyAll => {
            for (name, f) in SUITE {
                out.set_prefix(name);
                step(name, f, &mut out, &mut report)?;
            }
            out.set_prefix("");
        }
        sub => {
            let f = command(sub).expect("every single subcommand is in the suite");
            step(sub.name(), f, &mut out, &mut report)?;
        }
    }
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: cfg.subcommand,
        config: cfg.clone(),
        duration_seconds: (!opts.serial).then(|| start.elapsed().as_secs_f64()),
        checks: report.checks.clone(),
        all_passed: report.passed(),
        files: out.files(),
    };
    out.write_manifest(&manifest)?;
    Ok(RunOutcome { manifest, report })
}

/// Write `error.json` into `dir` if it exists; errors are ignored since the
/// record also goes to stderr.
pub fn write_error_record(dir: &Path, rec: &ErrorRecord) {
    if dir.is_dir() {
        let _ = std::fs::write(dir.join("error.json"), rec.to_json() + "\n");
    }
}
