//! Scalar transport by pullback, functional and geometric mixing scales,
//! decay fits and the clump experiment.

mod clump;
mod field;
mod mix;
mod spectral;

pub use clump::{
    clump_center, clump_radius, displacement_constant, validate_period_multiple, ClumpRow,
    ClumpTable, CLUMP_BOUNDARY_POINTS,
};
pub use field::{advect, cell_center, palette, InitialData, ScalarField, FIELD_MAGIC};
pub use mix::{
    mix_series, Axis, FitWindow, Metric, MixFit, MixFits, MixOptions, MixReport, MixRow,
    DEFAULT_FIT_START,
};
pub use spectral::{
    disk_cell_count, frequency, geometric_scale, h_minus_one, DiskAverager, Fft2, MEAN_ZERO_TOL,
};
