//! Simulation engine for a two-variable model of AI adoption and urban
//! traffic congestion.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] – state and parameter types, right-hand side, Jacobian, fixed points.
//! * [`integrate`] – fixed-step RK4 and adaptive Dormand–Prince 5(4) with dense output.
//! * [`analysis`] – threshold events, sweeps, sensitivities, calibration.
//! * [`scenario`] – the four built-in scenarios and the JSON scenario document.
//! * [`io`] – trajectory CSV/JSON and run manifests.
//! * [`report`] – SVG line charts.
//!
//! ```
//! use mobisim_core::{preset, simulate};
//!
//! let spec = preset("scenario-1").unwrap();
//! let run = simulate(&spec).unwrap();
//! assert!(run.trajectory.final_state().congestion < 0.1);
//! ```

// `!(x > y)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod integrate;
pub mod io;
pub mod model;
pub mod report;
pub mod scenario;

pub use error::{Error, Result};
pub use integrate::{
    evaluate_dense, integrate, step_rk4, DenseOutput, DenseSegment, Diagnostics, Horizon,
    IntegratorConfig, Method, Solution, Trajectory,
};
pub use model::{
    equilibria, jacobian, rhs, Derivative, FixedPoint, Jacobian, MobilityState, ModelParams,
    Stability,
};
pub use scenario::{parse_scenario, preset, preset_names, presets, simulate, ParamKey, ScenarioSpec};
