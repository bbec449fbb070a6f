//! Analyses built on top of simulations.

mod calibrate;
mod events;
pub mod nelder_mead;
mod sweep;

pub use calibrate::{
    calibrate, calibrate_multistart, CalibrationProblem, CalibrationResult, Observation,
};
pub use events::{find_events, Crossing, Direction, EventHit, EventSpec, Variable, Which};
pub use sweep::{
    evaluate_metric, sensitivity, sensitivity_with_step, sweep, Metric, RowOutcome, Scheme,
    SensitivityRow, SweepRow, SweepSpec, DEFAULT_RELATIVE_STEP,
};
