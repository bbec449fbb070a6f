//! Scalar metrics of a run, one-parameter sweeps and finite-difference sensitivities.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::events::{find_events, Direction, EventSpec, Variable, Which};
use crate::error::{Error, Result};
use crate::scenario::{simulate, ParamKey, ScenarioSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    FinalCongestion,
    FinalAdoption,
    /// First time adoption reaches the given level.
    TimeToAdoptionLevel(f64),
    MinCongestion,
    PeakCongestion,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::FinalCongestion => f.write_str("final-congestion"),
            Metric::FinalAdoption => f.write_str("final-adoption"),
            Metric::TimeToAdoptionLevel(l) => write!(f, "time-to-adoption:{l}"),
            Metric::MinCongestion => f.write_str("min-congestion"),
            Metric::PeakCongestion => f.write_str("peak-congestion"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(level) = s
            .strip_prefix("time-to-adoption:")
            .or_else(|| s.strip_prefix("time-to-adoption="))
        {
            let v: f64 = level.parse().map_err(|_| {
                Error::Validation(format!("time-to-adoption level `{level}` is not a number"))
            })?;
            if !v.is_finite() {
                return Err(Error::Validation("time-to-adoption level must be finite".into()));
            }
            return Ok(Metric::TimeToAdoptionLevel(v));
        }
        match s {
            "final-congestion" => Ok(Metric::FinalCongestion),
            "final-adoption" => Ok(Metric::FinalAdoption),
            "min-congestion" => Ok(Metric::MinCongestion),
            "peak-congestion" => Ok(Metric::PeakCongestion),
            other => Err(Error::Validation(format!(
                "unknown metric `{other}` (expected final-congestion, final-adoption, \
                 time-to-adoption:<level>, min-congestion or peak-congestion)"
            ))),
        }
    }
}

/// Runs `spec` and reduces it to `metric`; `Ok(None)` when a time-to-level
/// metric never reaches its level.
pub fn evaluate_metric(spec: &ScenarioSpec, metric: Metric) -> Result<Option<f64>> {
    let sol = simulate(spec)?;
    let tr = &sol.trajectory;
    let c = tr.states.iter().map(|s| s.congestion);
    Ok(match metric {
        Metric::FinalCongestion => Some(tr.final_state().congestion),
        Metric::FinalAdoption => Some(tr.final_state().adoption),
        Metric::MinCongestion => Some(c.fold(f64::INFINITY, f64::min)),
        Metric::PeakCongestion => Some(c.fold(f64::NEG_INFINITY, f64::max)),
        Metric::TimeToAdoptionLevel(level) => {
            let ev = EventSpec::new(Variable::Adoption, level, Direction::Any, Which::First);
            find_events(tr, sol.dense.as_ref(), &ev)?.first().map(|h| h.t)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: ParamKey,
    pub values: Vec<f64>,
    pub metric: Metric,
}

impl SweepSpec {
    /// `steps` evenly spaced values from `from` to `to` inclusive.
    pub fn linspace(parameter: ParamKey, from: f64, to: f64, steps: usize, metric: Metric) -> Self {
        let values = match steps {
            0 => Vec::new(),
            1 => vec![from],
            n => (0..n)
                .map(|i| {
                    if i == n - 1 {
                        to
                    } else {
                        from + (i as f64) * (to - from) / ((n - 1) as f64)
                    }
                })
                .collect(),
        };
        Self {
            parameter,
            values,
            metric,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowOutcome {
    Value(f64),
    NoEvent,
    Failed(String),
}

impl RowOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            RowOutcome::Value(v) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: RowOutcome,
}

/// Re-runs `base` once per swept value. Rows keep input order; a failing row
/// is recorded rather than aborting the sweep.
pub fn sweep(base: &ScenarioSpec, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.values.is_empty() {
        return Err(Error::Validation("sweep needs at least one value".into()));
    }
    if let Some(v) = spec.values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Validation(format!("sweep value {v} is not finite")));
    }
    Ok(spec
        .values
        .par_iter()
        .map(|&value| {
            let run = spec.parameter.with(base, value);
            let outcome = match evaluate_metric(&run, spec.metric) {
                Ok(Some(v)) => RowOutcome::Value(v),
                Ok(None) => RowOutcome::NoEvent,
                Err(e) => RowOutcome::Failed(e.to_string()),
            };
            SweepRow { value, outcome }
        })
        .collect())
}

pub const DEFAULT_RELATIVE_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Central,
    /// Used when stepping down would leave the parameter's domain.
    Forward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub parameter: ParamKey,
    pub value: f64,
    pub step: f64,
    pub scheme: Scheme,
    /// `None` when the metric is undefined at a perturbed point.
    pub derivative: Option<f64>,
}

/// Central finite-difference derivatives of `metric` with respect to each of
/// `parameters`, using the step `1e-4 * max(|p|, 1e-6)`.
pub fn sensitivity(
    base: &ScenarioSpec,
    metric: Metric,
    parameters: &[ParamKey],
) -> Result<Vec<SensitivityRow>> {
    sensitivity_with_step(base, metric, parameters, DEFAULT_RELATIVE_STEP)
}

pub fn sensitivity_with_step(
    base: &ScenarioSpec,
    metric: Metric,
    parameters: &[ParamKey],
    relative_step: f64,
) -> Result<Vec<SensitivityRow>> {
    if !(relative_step > 0.0 && relative_step.is_finite()) {
        return Err(Error::domain("relative_step", "must be positive and finite"));
    }
    let centre = evaluate_metric(base, metric)?;
    Ok(parameters
        .par_iter()
        .map(|&key| {
            let value = key.get(base);
            let step = relative_step * value.abs().max(1e-6);
            let m = |v: f64| evaluate_metric(&key.with(base, v), metric).ok().flatten();
            let (scheme, derivative) = if key.non_negative() && value - step < 0.0 {
                let d = match (m(value + step), centre) {
                    (Some(hi), Some(mid)) => Some((hi - mid) / step),
                    _ => None,
                };
                (Scheme::Forward, d)
            } else {
                let d = match (m(value + step), m(value - step)) {
                    (Some(hi), Some(lo)) => Some((hi - lo) / (2.0 * step)),
                    _ => None,
                };
                (Scheme::Central, d)
            };
            SensitivityRow {
                parameter: key,
                value,
                step,
                scheme,
                derivative,
            }
        })
        .collect())
}
