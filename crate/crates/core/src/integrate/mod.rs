//! Time stepping: fixed-step RK4 and adaptive Dormand–Prince 5(4).

mod dense;
pub(crate) mod dopri;
mod rk4;

use serde::{Deserialize, Serialize};

pub use dense::{evaluate_dense, DenseOutput, DenseSegment};
pub use rk4::step_rk4;
pub(crate) use rk4::rk4_raw;

use crate::error::{Error, Result};
use crate::model::{MobilityState, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    FixedRk4,
    AdaptiveRk45,
}

impl Method {
    pub fn is_adaptive(self) -> bool {
        matches!(self, Method::AdaptiveRk45)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::FixedRk4 => "fixed-rk4",
            Method::AdaptiveRk45 => "adaptive-rk45",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed-rk4" => Ok(Method::FixedRk4),
            "adaptive-rk45" => Ok(Method::AdaptiveRk45),
            other => Err(Error::Validation(format!(
                "unknown integrator method `{other}` (expected fixed-rk4 or adaptive-rk45)"
            ))),
        }
    }
}

pub const DEFAULT_STEP: f64 = 0.01;
pub const DEFAULT_RTOL: f64 = 1e-8;
pub const DEFAULT_ATOL: f64 = 1e-10;
pub const DEFAULT_MAX_STEPS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "default_method")]
    pub method: Method,
    /// Step size of the fixed-step method.
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_method() -> Method {
    Method::FixedRk4
}
fn default_step() -> f64 {
    DEFAULT_STEP
}
fn default_rtol() -> f64 {
    DEFAULT_RTOL
}
fn default_atol() -> f64 {
    DEFAULT_ATOL
}
fn default_max_steps() -> usize {
    DEFAULT_MAX_STEPS
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::FixedRk4,
            step: DEFAULT_STEP,
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }
}

impl IntegratorConfig {
    pub fn fixed(step: f64) -> Self {
        Self {
            method: Method::FixedRk4,
            step,
            ..Self::default()
        }
    }

    pub fn adaptive(rtol: f64, atol: f64) -> Self {
        Self {
            method: Method::AdaptiveRk45,
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("step", self.step), ("rtol", self.rtol), ("atol", self.atol)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(name, format!("{name} must be positive and finite")));
            }
        }
        if self.rtol < 1e-14 {
            return Err(Error::domain("rtol", "rtol must be ≥ 1e-14"));
        }
        if self.max_steps == 0 {
            return Err(Error::domain("max_steps", "max_steps must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Horizon {
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_output_points")]
    pub output_points: usize,
}

fn default_t_end() -> f64 {
    100.0
}
fn default_output_points() -> usize {
    1001
}

impl Default for Horizon {
    fn default() -> Self {
        Self {
            t0: 0.0,
            t_end: 100.0,
            output_points: 1001,
        }
    }
}

impl Horizon {
    pub fn new(t0: f64, t_end: f64, output_points: usize) -> Self {
        Self {
            t0,
            t_end,
            output_points,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t0.is_finite() {
            return Err(Error::domain("t0", "t0 must be finite"));
        }
        if !self.t_end.is_finite() {
            return Err(Error::domain("t_end", "t_end must be finite"));
        }
        if self.t_end <= self.t0 {
            return Err(Error::domain("t_end", "t_end must be > t0"));
        }
        if self.output_points < 2 {
            return Err(Error::domain("output_points", "output_points must be ≥ 2"));
        }
        Ok(())
    }

    pub fn span(&self) -> f64 {
        self.t_end - self.t0
    }

    /// The evenly spaced output grid `t0 + i (t_end - t0) / (n - 1)`, last point exactly `t_end`.
    pub fn grid(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let n = self.output_points;
        let span = self.span();
        let denom = (n - 1) as f64;
        let mut grid: Vec<f64> = (0..n)
            .map(|i| self.t0 + (i as f64) * span / denom)
            .collect();
        grid[n - 1] = self.t_end;
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain(
                "output_points",
                "too many output points for the span; grid is not strictly increasing",
            ));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagnostics {
    pub adoption_went_negative: bool,
    pub congestion_went_negative: bool,
    /// Accepted steps.
    pub steps: usize,
    pub rejected_steps: usize,
}

impl Diagnostics {
    fn observe(&mut self, y: [f64; 2]) {
        self.congestion_went_negative |= y[0] < 0.0;
        self.adoption_went_negative |= y[1] < 0.0;
    }
}

/// A sampled solution together with what produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<MobilityState>,
    pub scenario_name: String,
    pub params: ModelParams,
    pub integrator: IntegratorConfig,
    pub diagnostics: Diagnostics,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("non-empty trajectory")
    }

    pub fn final_state(&self) -> MobilityState {
        *self.states.last().expect("non-empty trajectory")
    }

    /// Checks the structural invariants (matching lengths, strictly increasing times).
    pub fn check_ordered(&self) -> Result<()> {
        if self.times.len() != self.states.len() {
            return Err(Error::Contract(format!(
                "trajectory has {} times but {} states",
                self.times.len(),
                self.states.len()
            )));
        }
        if self.times.len() < 2 {
            return Err(Error::Contract("trajectory needs at least 2 samples".into()));
        }
        if let Some(i) = self.times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Contract(format!(
                "times not strictly increasing at sample {}",
                i + 1
            )));
        }
        Ok(())
    }
}

/// Output of [`integrate`]: the trajectory and, for the adaptive method, the
/// per-step interpolant.
#[derive(Debug, Clone)]
pub struct Solution {
    pub trajectory: Trajectory,
    pub dense: Option<DenseOutput>,
}

/// Integrates the model over `horizon`, sampling on its evenly spaced grid.
pub fn integrate(
    initial: MobilityState,
    params: &ModelParams,
    horizon: &Horizon,
    config: &IntegratorConfig,
) -> Result<Solution> {
    let grid = horizon.grid()?;
    integrate_on_grid(initial, params, &grid, config)
}

/// Integrates the model from `grid[0]` and samples at every grid time.
pub fn integrate_on_grid(
    initial: MobilityState,
    params: &ModelParams,
    grid: &[f64],
    config: &IntegratorConfig,
) -> Result<Solution> {
    initial.validate()?;
    params.validate()?;
    config.validate()?;
    if grid.len() < 2 {
        return Err(Error::Contract("output grid needs at least 2 times".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Contract(
            "output grid must be finite and strictly increasing".into(),
        ));
    }
    let (states, diagnostics, dense) = match config.method {
        Method::FixedRk4 => {
            let (s, d) = run_fixed(initial, params, grid, config)?;
            (s, d, None)
        }
        Method::AdaptiveRk45 => {
            let (s, d, dense) = run_adaptive(initial, params, grid, config)?;
            (s, d, Some(dense))
        }
    };
    Ok(Solution {
        trajectory: Trajectory {
            times: grid.to_vec(),
            states,
            scenario_name: String::new(),
            params: *params,
            integrator: *config,
            diagnostics,
        },
        dense,
    })
}

/// Fixed-step RK4 from `t_from` to `t_to`, shortening the final step to land
/// exactly on `t_to`. Returns the end state and the number of steps taken.
pub(crate) fn rk4_span(
    y0: [f64; 2],
    t_from: f64,
    t_to: f64,
    h: f64,
    params: &ModelParams,
    mut on_step: impl FnMut(f64, [f64; 2]) -> Result<()>,
) -> Result<[f64; 2]> {
    let mut y = y0;
    let mut t = t_from;
    loop {
        let remaining = t_to - t;
        // A sliver of slack so float drift never produces a near-zero final step.
        let last = remaining <= h * (1.0 + 1e-9);
        let step = if last { remaining } else { h };
        y = rk4_raw(y, step, params).ok_or_else(|| Error::Numerical {
            t,
            h: step,
            reason: "non-finite Runge-Kutta stage".into(),
        })?;
        t = if last { t_to } else { t + step };
        on_step(t, y)?;
        if last {
            return Ok(y);
        }
    }
}

fn run_fixed(
    initial: MobilityState,
    params: &ModelParams,
    grid: &[f64],
    config: &IntegratorConfig,
) -> Result<(Vec<MobilityState>, Diagnostics)> {
    let mut diag = Diagnostics::default();
    let mut states = Vec::with_capacity(grid.len());
    states.push(initial);
    let mut y = initial.to_array();
    for w in grid.windows(2) {
        y = rk4_span(y, w[0], w[1], config.step, params, |t, y| {
            diag.steps += 1;
            diag.observe(y);
            if diag.steps > config.max_steps {
                return Err(Error::MaxSteps {
                    t,
                    max_steps: config.max_steps,
                });
            }
            Ok(())
        })?;
        states.push(MobilityState::from_array(y));
    }
    Ok((states, diag))
}

fn run_adaptive(
    initial: MobilityState,
    params: &ModelParams,
    grid: &[f64],
    config: &IntegratorConfig,
) -> Result<(Vec<MobilityState>, Diagnostics, DenseOutput)> {
    let t0 = grid[0];
    let t_end = *grid.last().unwrap();
    let span = t_end - t0;
    let h_min = 1e-14 * span;

    let mut diag = Diagnostics::default();
    let mut states = Vec::with_capacity(grid.len());
    states.push(initial);
    let mut segments = Vec::new();
    let mut next = 1;

    let mut t = t0;
    let mut y = initial.to_array();
    let mut f = params.eval(y[0], y[1]);
    let mut h = 1e-3 * span;
    let mut last_rejected = false;

    while t < t_end {
        if diag.steps + diag.rejected_steps >= config.max_steps {
            return Err(Error::MaxSteps {
                t,
                max_steps: config.max_steps,
            });
        }
        if h < h_min {
            return Err(Error::Stiff { t, h });
        }
        let last = t + h >= t_end || t_end - (t + h) < h_min;
        if last {
            h = t_end - t;
        }
        let at = dopri::attempt(y, f, h, params);
        let finite = at.y_new.iter().chain(at.f_new.iter()).all(|v| v.is_finite());
        let err = if finite {
            dopri::error_norm(y, &at, config.rtol, config.atol)
        } else {
            f64::INFINITY
        };

        if err <= 1.0 {
            let t_new = if last { t_end } else { t + h };
            let seg = dopri::segment(t, h, y, &at, t_new);
            while next < grid.len() && grid[next] <= t_new {
                states.push(seg.eval(grid[next]));
                next += 1;
            }
            segments.push(seg);
            diag.steps += 1;
            diag.observe(at.y_new);
            t = t_new;
            y = at.y_new;
            f = at.f_new;
            let mut fac = dopri::step_factor(err);
            if last_rejected {
                fac = fac.min(1.0);
            }
            last_rejected = false;
            h *= fac;
        } else {
            diag.rejected_steps += 1;
            last_rejected = true;
            h *= if err.is_finite() {
                dopri::step_factor(err)
            } else {
                0.2
            };
        }
    }
    debug_assert_eq!(states.len(), grid.len());
    Ok((states, diag, DenseOutput { segments }))
}
