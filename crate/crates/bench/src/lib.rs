//! Benchmarks for the simulation engine live in `benches/`; run them with
//! `cargo bench -p mobisim-bench`.

use mobisim_core::analysis::Observation;
use mobisim_core::{preset, simulate, ScenarioSpec};

/// Every `stride`-th sample of a scenario run, used as calibration data.
pub fn synthetic_observations(spec: &ScenarioSpec, stride: usize) -> Vec<Observation> {
    let run = simulate(spec).expect("scenario integrates");
    let tr = &run.trajectory;
    tr.times
        .iter()
        .zip(&tr.states)
        .step_by(stride)
        .map(|(&t, s)| Observation {
            t,
            congestion: s.congestion,
            adoption: s.adoption,
        })
        .collect()
}

pub fn scenario(name: &str) -> ScenarioSpec {
    preset(name).expect("built-in preset")
}
