//! Log-distance energy of the strip `0 < x1 < pi` under the flow.
//!
//! The boundary of the image of the strip is the image of its boundary, two
//! vertical circles, tracked as adaptive polylines. The energy
//! `E = int_L |log dist(Phi x, Phi(dL))| dx` is estimated by Monte Carlo and
//! compared with the cumulative `W^{1,1}` norm of the velocity.

mod boundary;
mod functional;
mod index;

pub use boundary::{
    initial_boundary, push_boundary, write_loops_svg, BoundaryLoop, BoundaryTracker,
    RefinementOptions, DECK, DEFAULT_DEPTH_CAP, DEFAULT_INITIAL_VERTICES, DEFAULT_REFINEMENT_TOL,
    DEFAULT_VERTEX_BUDGET,
};
pub use functional::{
    energy_e, energy_series, energy_series_partial, log_mix_ratio, strip_energy_exact, EnergyEstimate, EnergyRow,
    EnergySeries, DISTANCE_FLOOR, MIN_QUAD, STRIP_AREA,
};
pub use index::SegmentIndex;
