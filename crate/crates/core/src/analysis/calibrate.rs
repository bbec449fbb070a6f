//! Least-squares fitting of model constants to observed trajectories.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nelder_mead::{minimize, NelderMeadOptions};
use crate::error::{Error, Result};
use crate::integrate::{integrate_on_grid, IntegratorConfig};
use crate::io::Samples;
use crate::model::{MobilityState, ModelParams};
use crate::scenario::ParamKey;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub t: f64,
    pub congestion: f64,
    pub adoption: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationProblem {
    pub observations: Vec<Observation>,
    /// State at `t0`, the start of every simulation.
    pub initial: MobilityState,
    pub t0: f64,
    /// Parameters to fit; the rest stay at their `initial_guess` values.
    pub free: Vec<ParamKey>,
    pub initial_guess: ModelParams,
    pub integrator: IntegratorConfig,
}

impl CalibrationProblem {
    /// Uses the first sample as the initial condition and every sample as an observation.
    pub fn from_samples(
        samples: &Samples,
        free: Vec<ParamKey>,
        initial_guess: ModelParams,
        integrator: IntegratorConfig,
    ) -> Result<Self> {
        let (Some(&t0), Some(&initial)) = (samples.times.first(), samples.states.first()) else {
            return Err(Error::Calibration("no observations".into()));
        };
        Ok(Self {
            observations: samples
                .times
                .iter()
                .zip(&samples.states)
                .map(|(&t, s)| Observation {
                    t,
                    congestion: s.congestion,
                    adoption: s.adoption,
                })
                .collect(),
            initial,
            t0,
            free,
            initial_guess,
            integrator,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n_obs = self.observations.len();
        if n_obs < 3 {
            return Err(Error::Calibration(format!(
                "need at least 3 observations, got {n_obs}"
            )));
        }
        if self.free.is_empty() {
            return Err(Error::Calibration("no free parameters".into()));
        }
        if 2 * n_obs < self.free.len() {
            return Err(Error::Calibration(format!(
                "{} residuals cannot determine {} free parameters",
                2 * n_obs,
                self.free.len()
            )));
        }
        for (i, k) in self.free.iter().enumerate() {
            if matches!(k, ParamKey::C0 | ParamKey::A0) {
                return Err(Error::Calibration(format!(
                    "{k} is an initial condition, not a model constant"
                )));
            }
            if self.free[..i].contains(k) {
                return Err(Error::Calibration(format!("{k} listed twice")));
            }
        }
        self.initial_guess.validate()?;
        for k in &self.free {
            let v = k.param_value(&self.initial_guess).unwrap_or(f64::NAN);
            if !(v > 0.0) {
                return Err(Error::Calibration(format!(
                    "initial guess for {k} must be > 0 (fitting happens in log space)"
                )));
            }
        }
        self.initial.validate()?;
        self.integrator.validate()?;
        if !self.t0.is_finite() {
            return Err(Error::Calibration("t0 must be finite".into()));
        }
        let mut prev = self.t0;
        for (i, o) in self.observations.iter().enumerate() {
            if !(o.t.is_finite() && o.congestion.is_finite() && o.adoption.is_finite()) {
                return Err(Error::Calibration(format!("observation {i} is not finite")));
            }
            let ok = if i == 0 { o.t >= prev } else { o.t > prev };
            if !ok {
                return Err(Error::Calibration(format!(
                    "observation times must be strictly increasing and ≥ t0 (observation {i})"
                )));
            }
            prev = o.t;
        }
        Ok(())
    }

    fn params_at(&self, log_x: &[f64]) -> ModelParams {
        let mut p = self.initial_guess;
        for (k, lx) in self.free.iter().zip(log_x) {
            k.set_param(&mut p, lx.exp());
        }
        p
    }

    /// Sum of squared residuals over all observations; `+inf` if the model
    /// cannot be integrated at `params`.
    pub fn objective(&self, params: &ModelParams) -> f64 {
        if params.validate().is_err() {
            return f64::INFINITY;
        }
        let starts_at_t0 = self.observations[0].t == self.t0;
        let mut grid = Vec::with_capacity(self.observations.len() + 1);
        if !starts_at_t0 {
            grid.push(self.t0);
        }
        grid.extend(self.observations.iter().map(|o| o.t));
        let Ok(sol) = integrate_on_grid(self.initial, params, &grid, &self.integrator) else {
            return f64::INFINITY;
        };
        let offset = usize::from(!starts_at_t0);
        self.observations
            .iter()
            .zip(&sol.trajectory.states[offset..])
            .map(|(o, s)| {
                let dc = s.congestion - o.congestion;
                let da = s.adoption - o.adoption;
                dc * dc + da * da
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub params: ModelParams,
    /// Sum of squared residuals at `params`.
    pub objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder–Mead in log-parameter space, which keeps every free constant positive.
pub fn calibrate(problem: &CalibrationProblem) -> Result<CalibrationResult> {
    problem.validate()?;
    let x0: Vec<f64> = problem
        .free
        .iter()
        .map(|k| k.param_value(&problem.initial_guess).unwrap().ln())
        .collect();
    let res = minimize(
        |x| problem.objective(&problem.params_at(x)),
        &x0,
        &NelderMeadOptions::default(),
    );
    if res.initial_values.iter().all(|f| !f.is_finite()) {
        return Err(Error::Calibration(
            "every vertex of the initial simplex failed to integrate".into(),
        ));
    }
    Ok(CalibrationResult {
        params: problem.params_at(&res.x),
        objective: res.f,
        iterations: res.iterations,
        evaluations: res.evaluations,
        converged: res.converged,
    })
}

/// Independent calibrations from several starting guesses, run in parallel.
pub fn calibrate_multistart(
    problem: &CalibrationProblem,
    guesses: &[ModelParams],
) -> Vec<Result<CalibrationResult>> {
    guesses
        .par_iter()
        .map(|g| {
            let mut p = problem.clone();
            p.initial_guess = *g;
            calibrate(&p)
        })
        .collect()
}
