//! Run configuration: a TOML file with one table per experiment.
//!
//! Parsing is strict. Keys outside the schema (the serialized default
//! configuration) are rejected with their dotted path, and so are values of
//! the wrong type. Every key is optional; missing keys take their defaults,
//! which reproduce the acceptance runs.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::chains::default_r0;
use crate::transport::InitialData;

/// Configuration failure; `key` names the offending entry when there is one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            key: Some(key.into()),
            message: message.into(),
        }
    }

    fn general(message: impl Into<String>) -> Self {
        ConfigError {
            key: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(k) => write!(f, "{k}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Simulate,
    MixSeries,
    Lyapunov,
    DriftSweep,
    RankCheck,
    Furstenberg,
    Steer,
    EnergySeries,
    Clump,
    VerifyAll,
}

impl Subcommand {
    pub const ALL: [Subcommand; 10] = [
        Subcommand::Simulate,
        Subcommand::MixSeries,
        Subcommand::Lyapunov,
        Subcommand::DriftSweep,
        Subcommand::RankCheck,
        Subcommand::Furstenberg,
        Subcommand::Steer,
        Subcommand::EnergySeries,
        Subcommand::Clump,
        Subcommand::VerifyAll,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::MixSeries => "mix-series",
            Subcommand::Lyapunov => "lyapunov",
            Subcommand::DriftSweep => "drift-sweep",
            Subcommand::RankCheck => "rank-check",
            Subcommand::Furstenberg => "furstenberg",
            Subcommand::Steer => "steer",
            Subcommand::EnergySeries => "energy-series",
            Subcommand::Clump => "clump",
            Subcommand::VerifyAll => "verify-all",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| ConfigError::at("subcommand", format!("unknown subcommand `{s}`")))
    }
}

/// How `simulate` draws its schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    RandomUniform,
    Constant,
    /// Every magnitude zero: the identity flow.
    Zero,
}

/// Initial data stored as its textual tag (`bressan-stripe`, `sine-k:1,0`).
mod initial_tag {
    use super::InitialData;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(u: &InitialData, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&u.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<InitialData, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(|e| D::Error::custom(format!("{e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(with = "initial_tag")]
    pub initial: InitialData,
    pub schedule: ScheduleKind,
    #[serde(rename = "T")]
    pub t_max: f64,
    pub n_pairs: usize,
    pub resolution: usize,
    /// Side of the SVG snapshots in pixels.
    pub svg_px: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            initial: InitialData::BressanStripe,
            schedule: ScheduleKind::RandomUniform,
            t_max: 20.0,
            n_pairs: 4,
            resolution: 256,
            svg_px: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixConfig {
    #[serde(with = "initial_tag")]
    pub initial: InitialData,
    #[serde(rename = "T")]
    pub t_max: f64,
    pub n_pairs: usize,
    pub resolution: usize,
    /// Independent schedules; replicate `k` uses seed `derive(seed, k)`.
    pub replicates: usize,
    pub threshold: f64,
    pub fit_start: usize,
    pub fit_end: usize,
}

impl Default for MixConfig {
    fn default() -> Self {
        MixConfig {
            initial: InitialData::BressanStripe,
            t_max: 20.0,
            n_pairs: 30,
            resolution: 512,
            replicates: 5,
            threshold: 1.0,
            fit_start: 3,
            fit_end: 30,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovConfig {
    #[serde(rename = "T")]
    pub t_max: f64,
    pub n_steps: usize,
    pub n_samples: usize,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        LyapunovConfig {
            t_max: 20.0,
            n_steps: 1000,
            n_samples: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftConfig {
    pub alpha: f64,
    #[serde(rename = "T")]
    pub t_max: f64,
    pub r0: f64,
    pub n_mc: usize,
    /// Log-spaced distances from the fixed set, from `r0 * r_min_factor` to `r0`.
    pub n_radial: usize,
    pub r_min_factor: f64,
    /// Ratios `|x_small| / |x_large|` of the base points.
    pub fractions: Vec<f64>,
}

impl Default for DriftConfig {
    fn default() -> Self {
        DriftConfig {
            alpha: 1.0 / 20.0,
            t_max: 5e5,
            r0: default_r0(5e5),
            n_mc: 1_000_000,
            n_radial: 4,
            r_min_factor: 1e-6,
            fractions: vec![0.25, 0.75],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiniteDifferenceConfig {
    /// Central-difference step in the magnitudes.
    pub h: f64,
}

impl Default for FiniteDifferenceConfig {
    fn default() -> Self {
        FiniteDifferenceConfig { h: crate::chains::DEFAULT_FD_STEP }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteerConfig {
    /// Random starts per chain.
    pub n_starts: usize,
    pub radius: f64,
    pub budget: u64,
}

impl Default for SteerConfig {
    fn default() -> Self {
        SteerConfig {
            n_starts: 8,
            radius: 1e-2,
            budget: crate::chains::STEER_BUDGET,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    #[serde(rename = "T")]
    pub t_max: f64,
    pub n_pairs: usize,
    pub n_quad: usize,
    pub replicates: usize,
    pub refinement_tol: f64,
    pub depth_cap: u8,
    /// Vertex budget of each boundary loop.
    pub vertex_budget: usize,
    pub initial_vertices: usize,
    /// Pairs applied before the SVG snapshot of the loops.
    pub svg_pairs: usize,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        let r = crate::energy::RefinementOptions::default();
        EnergyConfig {
            t_max: 5.0,
            n_pairs: 10,
            n_quad: 100_000,
            replicates: 5,
            refinement_tol: r.tol,
            depth_cap: r.depth_cap,
            vertex_budget: r.vertex_budget,
            initial_vertices: r.initial_vertices,
            svg_pairs: 2,
        }
    }
}

impl EnergyConfig {
    pub fn refinement(&self) -> crate::energy::RefinementOptions {
        crate::energy::RefinementOptions {
            tol: self.refinement_tol,
            depth_cap: self.depth_cap,
            vertex_budget: self.vertex_budget,
            initial_vertices: self.initial_vertices,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClumpConfig {
    pub h: f64,
    #[serde(rename = "T")]
    pub t_max: f64,
    pub n_steps: usize,
    pub boundary_points: usize,
    /// Circles and angles per circle for the quadratic displacement constant.
    pub n_radii: usize,
    pub n_angles: usize,
    /// Resolution and inclusive pair windows of the windowed `H^{-1}` fits.
    pub resolution: usize,
    pub windows: Vec<[usize; 2]>,
}

impl Default for ClumpConfig {
    fn default() -> Self {
        ClumpConfig {
            h: 0.1,
            t_max: TAU,
            n_steps: 100,
            boundary_points: crate::transport::CLUMP_BOUNDARY_POINTS,
            n_radii: 16,
            n_angles: 4096,
            resolution: 512,
            windows: vec![[1, 25], [26, 50], [51, 75]],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExactnessConfig {
    /// Random points for the round trip and the determinant.
    pub n_points: usize,
    /// Magnitudes are uniform on `[0, T]`.
    #[serde(rename = "T")]
    pub t_max: f64,
    pub round_trip_pairs: usize,
    pub det_pairs: usize,
    /// Random cases of the finite-difference comparison.
    pub fd_cases: usize,
    pub fd_pairs: usize,
    /// Step of the spatial finite differences.
    pub fd_step: f64,
}

impl Default for ExactnessConfig {
    fn default() -> Self {
        ExactnessConfig {
            n_points: 10_000,
            t_max: 10.0,
            round_trip_pairs: 50,
            det_pairs: 500,
            fd_cases: 1000,
            fd_pairs: 1,
            fd_step: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub subcommand: Subcommand,
    /// Master seed; every stream of every experiment derives from it.
    pub seed: u64,
    /// Output directory.
    pub out: String,
    pub simulate: SimulateConfig,
    pub mix: MixConfig,
    pub lyapunov: LyapunovConfig,
    pub drift: DriftConfig,
    pub rank: FiniteDifferenceConfig,
    pub furstenberg: FiniteDifferenceConfig,
    pub steer: SteerConfig,
    pub energy: EnergyConfig,
    pub clump: ClumpConfig,
    pub exactness: ExactnessConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            subcommand: Subcommand::VerifyAll,
            seed: 1,
            out: "out".to_string(),
            simulate: SimulateConfig::default(),
            mix: MixConfig::default(),
            lyapunov: LyapunovConfig::default(),
            drift: DriftConfig::default(),
            rank: FiniteDifferenceConfig::default(),
            furstenberg: FiniteDifferenceConfig::default(),
            steer: SteerConfig::default(),
            energy: EnergyConfig::default(),
            clump: ClumpConfig::default(),
            exactness: ExactnessConfig::default(),
        }
    }
}

fn schema() -> Table {
    match Value::try_from(ExperimentConfig::default()).expect("default config serializes") {
        Value::Table(t) => t,
        _ => unreachable!("config serializes to a table"),
    }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "string",
        Value::Integer(_) => "integer",
        Value::Float(_) => "float",
        Value::Boolean(_) => "boolean",
        Value::Datetime(_) => "datetime",
        Value::Array(_) => "array",
        Value::Table(_) => "table",
    }
}

/// Reject keys missing from the schema and values of the wrong kind;
/// integers are accepted (and converted) where floats are expected.
fn conform(user: &mut Table, schema: &Table, path: &str) -> Result<(), ConfigError> {
    for (k, v) in user.iter_mut() {
        let key = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
        let Some(want) = schema.get(k) else {
            return Err(ConfigError::at(key, "unknown key"));
        };
        match (want, &mut *v) {
            (Value::Table(s), Value::Table(u)) => conform(u, s, &key)?,
            (Value::Float(_), Value::Integer(i)) => *v = Value::Float(*i as f64),
            (Value::Array(s), Value::Array(u)) => {
                if let Some(first) = s.first() {
                    for (idx, item) in u.iter_mut().enumerate() {
                        match (first, &mut *item) {
                            (Value::Float(_), Value::Integer(i)) => *item = Value::Float(*i as f64),
                            (a, b) if type_name(a) == type_name(b) => {}
                            (a, b) => {
                                return Err(ConfigError::at(
                                    format!("{key}[{idx}]"),
                                    format!("expected {}, found {}", type_name(a), type_name(b)),
                                ))
                            }
                        }
                    }
                }
            }
            (a, b) if type_name(a) == type_name(b) => {}
            (a, b) => {
                return Err(ConfigError::at(
                    key,
                    format!("expected {}, found {}", type_name(a), type_name(b)),
                ))
            }
        }
    }
    Ok(())
}

/// Parse the right-hand side of `--set key=value` as a TOML value, falling
/// back to a bare string.
fn parse_value(raw: &str) -> Value {
    let raw = raw.trim();
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => Value::String(raw.to_string()),
    }
}

fn set_path(table: &mut Table, key: &str, value: Value) -> Result<(), ConfigError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::at(key, "malformed key"));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => return Err(ConfigError::at(key, format!("`{p}` is not a table"))),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Dotted key of the first entry that fails to deserialize on its own.
fn locate_failure(table: &Table) -> Option<String> {
    let fails = |t: Table| Value::Table(t).try_into::<ExperimentConfig>().is_err();
    for (k, v) in table {
        if !fails(Table::from_iter([(k.clone(), v.clone())])) {
            continue;
        }
        if let Value::Table(inner) = v {
            for (k2, v2) in inner {
                let one = Table::from_iter([(k2.clone(), v2.clone())]);
                if fails(Table::from_iter([(k.clone(), Value::Table(one))])) {
                    return Some(format!("{k}.{k2}"));
                }
            }
        }
        return Some(k.clone());
    }
    None
}

impl ExperimentConfig {
    /// Parse a config file and apply `key=value` overrides on top of it.
    pub fn load(text: Option<&str>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table = match text {
            Some(t) => t
                .parse::<Table>()
                .map_err(|e| ConfigError::general(format!("malformed TOML: {}", e.message())))?,
            None => Table::new(),
        };
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| ConfigError::general(format!("override `{o}` is not of the form key=value")))?;
            set_path(&mut table, k.trim(), parse_value(v))?;
        }
        conform(&mut table, &schema(), "")?;
        let cfg: ExperimentConfig = Value::Table(table.clone()).try_into().map_err(|e: toml::de::Error| ConfigError {
            key: locate_failure(&table),
            message: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Self::load(Some(text), &[])
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Range checks on every numeric parameter.
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::at(key, format!("must be finite and > 0, got {v}")))
            }
        }
        fn at_least(key: &str, v: usize, min: usize) -> Result<(), ConfigError> {
            if v >= min {
                Ok(())
            } else {
                Err(ConfigError::at(key, format!("must be at least {min}, got {v}")))
            }
        }
        fn grid(key: &str, n: usize) -> Result<(), ConfigError> {
            if n >= 8 && n.is_power_of_two() {
                Ok(())
            } else {
                Err(ConfigError::at(key, format!("must be a power of two >= 8, got {n}")))
            }
        }
        if self.out.is_empty() {
            return Err(ConfigError::at("out", "must not be empty"));
        }

        let s = &self.simulate;
        positive("simulate.T", s.t_max)?;
        at_least("simulate.n_pairs", s.n_pairs, 1)?;
        grid("simulate.resolution", s.resolution)?;
        at_least("simulate.svg_px", s.svg_px, 16)?;

        let m = &self.mix;
        positive("mix.T", m.t_max)?;
        at_least("mix.n_pairs", m.n_pairs, 2)?;
        grid("mix.resolution", m.resolution)?;
        at_least("mix.replicates", m.replicates, 1)?;
        positive("mix.threshold", m.threshold)?;
        if m.fit_start >= m.fit_end || m.fit_end > m.n_pairs {
            return Err(ConfigError::at(
                "mix.fit_end",
                format!("need fit_start < fit_end <= n_pairs, got [{}, {}]", m.fit_start, m.fit_end),
            ));
        }

        let l = &self.lyapunov;
        positive("lyapunov.T", l.t_max)?;
        at_least("lyapunov.n_steps", l.n_steps, 10)?;
        at_least("lyapunov.n_samples", l.n_samples, 2)?;

        let d = &self.drift;
        if !(d.alpha > 0.0 && d.alpha < 1.0) {
            return Err(ConfigError::at("drift.alpha", format!("must lie in (0, 1), got {}", d.alpha)));
        }
        positive("drift.T", d.t_max)?;
        positive("drift.r0", d.r0)?;
        at_least("drift.n_mc", d.n_mc, 2)?;
        at_least("drift.n_radial", d.n_radial, 1)?;
        if !(d.r_min_factor > 0.0 && d.r_min_factor <= 1.0) {
            return Err(ConfigError::at("drift.r_min_factor", "must lie in (0, 1]"));
        }
        if d.fractions.is_empty() || d.fractions.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return Err(ConfigError::at("drift.fractions", "need at least one value in (0, 1]"));
        }

        positive("rank.h", self.rank.h)?;
        positive("furstenberg.h", self.furstenberg.h)?;

        positive("steer.radius", self.steer.radius)?;
        at_least("steer.n_starts", self.steer.n_starts, 1)?;
        if self.steer.budget == 0 {
            return Err(ConfigError::at("steer.budget", "must be at least 1"));
        }

        let e = &self.energy;
        positive("energy.T", e.t_max)?;
        at_least("energy.n_pairs", e.n_pairs, 1)?;
        at_least("energy.n_quad", e.n_quad, crate::energy::MIN_QUAD)?;
        at_least("energy.replicates", e.replicates, 1)?;
        positive("energy.refinement_tol", e.refinement_tol)?;
        at_least("energy.initial_vertices", e.initial_vertices, 16)?;
        at_least("energy.vertex_budget", e.vertex_budget, e.initial_vertices)?;

        let c = &self.clump;
        if !(c.h > 0.0 && c.h < 1.0) {
            return Err(ConfigError::at("clump.h", format!("must lie in (0, 1), got {}", c.h)));
        }
        crate::transport::validate_period_multiple(c.t_max).map_err(|e| ConfigError::at("clump.T", e.to_string()))?;
        at_least("clump.n_steps", c.n_steps, 1)?;
        at_least("clump.boundary_points", c.boundary_points, 1000)?;
        at_least("clump.n_radii", c.n_radii, 2)?;
        at_least("clump.n_angles", c.n_angles, 8)?;
        grid("clump.resolution", c.resolution)?;
        if c.windows.len() < 2 || c.windows.iter().any(|w| w[0] >= w[1]) {
            return Err(ConfigError::at("clump.windows", "need at least two windows [start, end] with start < end"));
        }

        let x = &self.exactness;
        at_least("exactness.n_points", x.n_points, 1)?;
        positive("exactness.T", x.t_max)?;
        at_least("exactness.round_trip_pairs", x.round_trip_pairs, 1)?;
        at_least("exactness.det_pairs", x.det_pairs, 1)?;
        at_least("exactness.fd_cases", x.fd_cases, 1)?;
        at_least("exactness.fd_pairs", x.fd_pairs, 1)?;
        positive("exactness.fd_step", x.fd_step)?;
        Ok(())
    }
}
