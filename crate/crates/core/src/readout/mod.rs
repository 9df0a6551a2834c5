//! Validation sweeps, robustness boxes and the monotone readout that turns a
//! measured expectation value back into a parameter estimate.

mod closeness;
mod fit;
mod stats;
mod sweep;

pub use closeness::{closeness, optimal_measurement, Closeness};
pub use fit::{Inversion, ReadoutCurve, INVERSION_TOL, MAX_DEGREE, MIN_DEGREE, MONOTONE_GRID};
pub use stats::{ranks, spearman};
pub use sweep::{
    argmax, nuisance_parameters, qfi_trajectory, robustness_sweep, sweep_values,
    validation_sweep, BoxCurve, Region, RobustnessPlan, RobustnessResult, SampleRange,
    SweepPlan, SweepRecord,
};
