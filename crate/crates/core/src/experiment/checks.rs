//! Pass/fail records and the tolerances they are judged with.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Entrywise tolerance on finite-difference matrices.
pub const MATRIX_TOL: f64 = 1e-4;
/// Drift ratio must not exceed `DRIFT_BOUND + 3 SE`.
pub const DRIFT_BOUND: f64 = 1.0 - 1e-4;
/// Minimum number of drift test locations.
pub const DRIFT_MIN_POINTS: usize = 50;
/// Minimum `R^2` of the log `H^{-1}` decay fit.
pub const MIX_H_R2_MIN: f64 = 0.95;
/// Minimum `R^2` of the `|log geometric scale|` growth fit.
pub const MIX_SCALE_R2_MIN: f64 = 0.9;
/// Relative change of the displacement constant under sample doubling.
pub const CLUMP_STABILITY_TOL: f64 = 1e-2;
/// Inverse round trip, torus distance.
pub const ROUND_TRIP_TOL: f64 = 1e-9;
/// `|det D Phi - 1|`.
pub const DET_TOL: f64 = 1e-10;
/// Analytic vs finite-difference Jacobian, relative Frobenius error.
pub const JACOBIAN_REL_TOL: f64 = 1e-4;
/// Projective landing on `(pi/2, pi/2)`, torus distance.
pub const STEER_LANDING_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: String,
    pub expected: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, measured: impl Into<String>, expected: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            measured: measured.into(),
            expected: expected.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: measured {} (expected {})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.expected
        )
    }
}

/// Checks of one experiment, diagnostic notes, and runtime failures (such
/// as a refinement overflow) that stopped part of it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub failures: Vec<String>,
}

impl Report {
    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn fail(&mut self, s: impl Into<String>) {
        self.failures.push(s.into());
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
        self.notes.extend(other.notes);
        self.failures.extend(other.failures);
    }

    /// One line per check followed by the notes.
    pub fn lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| c.to_string())
            .chain(self.notes.iter().map(|n| format!("NOTE {n}")))
            .chain(self.failures.iter().map(|f| format!("ERROR {f}")))
            .collect()
    }
}
