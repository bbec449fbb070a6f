//! Threshold-crossing detection on sampled trajectories.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{rk4_span, DenseOutput, DenseSegment, Trajectory};
use crate::model::{MobilityState, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variable {
    Congestion,
    Adoption,
}

impl Variable {
    pub fn of(self, s: &MobilityState) -> f64 {
        match self {
            Variable::Congestion => s.congestion,
            Variable::Adoption => s.adoption,
        }
    }
}

impl FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "congestion" => Ok(Variable::Congestion),
            "adoption" => Ok(Variable::Adoption),
            other => Err(Error::Validation(format!(
                "unknown variable `{other}` (expected congestion or adoption)"
            ))),
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variable::Congestion => "congestion",
            Variable::Adoption => "adoption",
        })
    }
}

/// Which crossings an [`EventSpec`] accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Upward,
    Downward,
    Any,
}

/// Direction of an actual crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Crossing {
    Upward,
    Downward,
}

impl Direction {
    fn accepts(self, c: Crossing) -> bool {
        match self {
            Direction::Any => true,
            Direction::Upward => c == Crossing::Upward,
            Direction::Downward => c == Crossing::Downward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Which {
    First,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub variable: Variable,
    pub level: f64,
    pub direction: Direction,
    pub which: Which,
}

impl EventSpec {
    pub fn new(variable: Variable, level: f64, direction: Direction, which: Which) -> Self {
        Self {
            variable,
            level,
            direction,
            which,
        }
    }

    /// Acceptable distance of the located value from the level.
    pub fn level_tolerance(&self) -> f64 {
        1e-9 * self.level.abs().max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventHit {
    pub t: f64,
    pub state: MobilityState,
    pub direction: Crossing,
}

/// Locates every crossing of `spec.level` by `spec.variable`.
///
/// Sign changes between consecutive samples are bracketed and refined by
/// bisection, on `dense` when given and otherwise on a cubic Hermite
/// interpolant of the bracketing interval re-integrated with RK4 at one
/// hundredth of the trajectory's configured step. A sample that lies exactly
/// on the level is reported once, at the sample time.
pub fn find_events(
    trajectory: &Trajectory,
    dense: Option<&DenseOutput>,
    spec: &EventSpec,
) -> Result<Vec<EventHit>> {
    trajectory.check_ordered()?;
    if !spec.level.is_finite() {
        return Err(Error::domain("level", "event level must be finite"));
    }
    let g = |s: &MobilityState| spec.variable.of(s) - spec.level;
    let time_tol = 1e-9 * (trajectory.t_end() - trajectory.t0());

    let mut hits = Vec::new();
    let mut prev: Option<usize> = None;
    let mut zero_at: Option<usize> = None;
    for (i, s) in trajectory.states.iter().enumerate() {
        let gi = g(s);
        if gi == 0.0 {
            zero_at.get_or_insert(i);
            continue;
        }
        if let Some(p) = prev {
            let gp = g(&trajectory.states[p]);
            if (gp < 0.0) != (gi < 0.0) {
                let dir = if gp < 0.0 {
                    Crossing::Upward
                } else {
                    Crossing::Downward
                };
                if spec.direction.accepts(dir) {
                    let hit = match zero_at {
                        Some(z) => EventHit {
                            t: trajectory.times[z],
                            state: trajectory.states[z],
                            direction: dir,
                        },
                        None => {
                            let (t, state) =
                                refine(trajectory, dense, p, i, spec, time_tol)?;
                            EventHit {
                                t,
                                state,
                                direction: dir,
                            }
                        }
                    };
                    hits.push(hit);
                    if spec.which == Which::First {
                        return Ok(hits);
                    }
                }
            }
        }
        prev = Some(i);
        zero_at = None;
    }
    Ok(hits)
}

fn refine(
    tr: &Trajectory,
    dense: Option<&DenseOutput>,
    left: usize,
    right: usize,
    spec: &EventSpec,
    time_tol: f64,
) -> Result<(f64, MobilityState)> {
    let (tl, tr_) = (tr.times[left], tr.times[right]);
    if let Some(d) = dense {
        let covers = d.t_start().is_some_and(|a| a <= tl) && d.t_end().is_some_and(|b| b >= tr_);
        if covers {
            let t = bisect(|t| d.evaluate(t), tl, tr_, spec, time_tol)?;
            return Ok((t, d.evaluate(t)?));
        }
    }
    let seg = local_segment(tr, left, right, spec)?;
    let t = bisect(|t| Ok(seg.eval(t)), seg.t_left, seg.t_right, spec, time_tol)?;
    Ok((t, seg.eval(t)))
}

/// Re-integrates `[times[left], times[right]]` at a hundredth of the step and
/// returns the Hermite segment over the sub-step that contains the crossing.
fn local_segment(
    tr: &Trajectory,
    left: usize,
    right: usize,
    spec: &EventSpec,
) -> Result<DenseSegment> {
    let p: ModelParams = tr.params;
    let h = tr.integrator.step / 100.0;
    let (t_left, t_right) = (tr.times[left], tr.times[right]);
    let y_left = tr.states[left];
    let g = |y: [f64; 2]| spec.variable.of(&MobilityState::from_array(y)) - spec.level;

    let mut pts: Vec<(f64, [f64; 2])> = vec![(t_left, y_left.to_array())];
    rk4_span(y_left.to_array(), t_left, t_right, h, &p, |t, y| {
        pts.push((t, y));
        Ok(())
    })?;
    // Use the recorded right sample as the final point so the bracket is
    // consistent with the coarse sign change.
    let last = pts.len() - 1;
    pts[last].1 = tr.states[right].to_array();

    let g0 = g(pts[0].1);
    let k = pts
        .windows(2)
        .position(|w| (g(w[1].1) < 0.0) != (g0 < 0.0) || g(w[1].1) == 0.0)
        .unwrap_or(last - 1);
    let (ta, ya) = pts[k];
    let (tb, yb) = pts[k + 1];
    Ok(DenseSegment::hermite(
        ta,
        tb,
        MobilityState::from_array(ya),
        MobilityState::from_array(yb),
        p.eval(ya[0], ya[1]),
        p.eval(yb[0], yb[1]),
    ))
}

fn bisect(
    eval: impl Fn(f64) -> Result<MobilityState>,
    mut lo: f64,
    mut hi: f64,
    spec: &EventSpec,
    time_tol: f64,
) -> Result<f64> {
    let level_tol = spec.level_tolerance();
    let g = |t: f64| -> Result<f64> { Ok(spec.variable.of(&eval(t)?) - spec.level) };
    let mut g_lo = g(lo)?;
    if g_lo == 0.0 {
        return Ok(lo);
    }
    let mut g_hi = g(hi)?;
    if g_hi == 0.0 {
        return Ok(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid)?;
        if gm == 0.0 || (hi - lo <= time_tol && gm.abs() <= level_tol) {
            return Ok(mid);
        }
        if (gm < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
            g_hi = gm;
        }
    }
    Ok(if g_lo.abs() <= g_hi.abs() { lo } else { hi })
}
