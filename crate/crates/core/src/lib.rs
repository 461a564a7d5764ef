//! Numerical laboratory for random alternating sine-shear flows on the
//! 2-torus.
//!
//! The crate is organised by subsystem:
//!
//! * [`flow`]: exact forward/inverse shear maps, tangent dynamics, schedules.
//! * [`chains`]: two-point and projective chains, Lyapunov exponents, drift
//!   certificates, submersion ranks, the Furstenberg rank test and steering.
//! * [`transport`]: pullback advection of scalars, `H^{-1}` and geometric
//!   mixing scales, decay fits and the clump experiment for constant
//!   durations.
//! * [`energy`]: adaptive boundary tracking and the log-distance energy.
//! * [`experiment`]: configuration, reproducible runs and manifests behind
//!   the `shearmix` binary.

pub mod chains;
pub mod energy;
pub mod error;
pub mod experiment;
pub mod flow;
pub mod seed;
pub mod stats;
pub mod transport;

pub use error::{Error, Result};
pub use flow::{
    apply_step, apply_step_inverse, flow, flow_inverse, jacobian_step, make_schedule,
    step_grad_l1, tangent_flow, wrap, wrap_signed, Direction, Jacobian2, Provenance, Schedule, ShearStep,
    TorusPoint, FIXED_SET,
};
