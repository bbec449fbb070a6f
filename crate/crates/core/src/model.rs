//! The coupled congestion/adoption model.
//!
//! ```text
//! dC/dt = -k1 * A * C + k2
//! dA/dt =  k3 * (A_max - A) - k4 * C
//! ```
//!
//! `C` is a congestion index and `A` an adoption index on the same scale as
//! `A_max`. Besides the right-hand side this module carries the analytic
//! Jacobian and the closed-form fixed points with their linear stability.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default adoption ceiling. `A` is read as a percentage-like index.
pub const DEFAULT_A_MAX: f64 = 100.0;

/// Instantaneous (congestion, adoption) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobilityState {
    pub congestion: f64,
    pub adoption: f64,
}

impl MobilityState {
    pub const fn new(congestion: f64, adoption: f64) -> Self {
        Self {
            congestion,
            adoption,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.congestion.is_finite() {
            return Err(Error::domain("congestion", "must be finite"));
        }
        if !self.adoption.is_finite() {
            return Err(Error::domain("adoption", "must be finite"));
        }
        Ok(())
    }

    pub(crate) fn to_array(self) -> [f64; 2] {
        [self.congestion, self.adoption]
    }

    pub(crate) fn from_array(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }

    pub fn is_finite(&self) -> bool {
        self.congestion.is_finite() && self.adoption.is_finite()
    }
}

/// The five model constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Congestion reduction per unit adoption.
    pub k1: f64,
    /// Exogenous congestion inflow.
    pub k2: f64,
    /// Adoption growth rate towards the ceiling.
    pub k3: f64,
    /// Drag of congestion on adoption.
    pub k4: f64,
    #[serde(default = "default_a_max")]
    pub a_max: f64,
}

fn default_a_max() -> f64 {
    DEFAULT_A_MAX
}

impl ModelParams {
    pub const fn new(k1: f64, k2: f64, k3: f64, k4: f64, a_max: f64) -> Self {
        Self {
            k1,
            k2,
            k3,
            k4,
            a_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("k1", self.k1),
            ("k2", self.k2),
            ("k3", self.k3),
            ("k4", self.k4),
        ];
        for (name, v) in rates {
            if !v.is_finite() {
                return Err(Error::domain(name, format!("{name} must be finite")));
            }
            if v < 0.0 {
                return Err(Error::domain(name, format!("{name} must be ≥ 0")));
            }
        }
        if !self.a_max.is_finite() {
            return Err(Error::domain("a_max", "a_max must be finite"));
        }
        if self.a_max <= 0.0 {
            return Err(Error::domain("a_max", "a_max must be > 0"));
        }
        Ok(())
    }

    /// Evaluates the right-hand side without validating the inputs.
    #[inline]
    pub(crate) fn eval(&self, c: f64, a: f64) -> [f64; 2] {
        [
            -self.k1 * a * c + self.k2,
            self.k3 * (self.a_max - a) - self.k4 * c,
        ]
    }
}

/// Time derivative of a [`MobilityState`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derivative {
    pub d_congestion: f64,
    pub d_adoption: f64,
}

/// Row-major 2×2 matrix; rows are (dC/dt, dA/dt), columns (∂/∂C, ∂/∂A).
pub type Jacobian = [[f64; 2]; 2];

fn check_inputs(state: &MobilityState, params: &ModelParams) -> Result<()> {
    state.validate()?;
    params.validate()
}

/// Right-hand side of the model.
pub fn rhs(state: MobilityState, params: &ModelParams) -> Result<Derivative> {
    check_inputs(&state, params)?;
    let [dc, da] = params.eval(state.congestion, state.adoption);
    if !dc.is_finite() {
        return Err(Error::domain("d_congestion", "overflowed to a non-finite value"));
    }
    if !da.is_finite() {
        return Err(Error::domain("d_adoption", "overflowed to a non-finite value"));
    }
    Ok(Derivative {
        d_congestion: dc,
        d_adoption: da,
    })
}

/// Analytic Jacobian of [`rhs`].
pub fn jacobian(state: MobilityState, params: &ModelParams) -> Result<Jacobian> {
    check_inputs(&state, params)?;
    Ok(jacobian_raw(state, params))
}

fn jacobian_raw(state: MobilityState, p: &ModelParams) -> Jacobian {
    [
        [-p.k1 * state.adoption, -p.k1 * state.congestion],
        [-p.k4, -p.k3],
    ]
}

/// Linear stability type of a fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    StableNode,
    StableSpiral,
    Saddle,
    UnstableNode,
    UnstableSpiral,
    Marginal,
}

impl Stability {
    pub fn is_stable(self) -> bool {
        matches!(self, Stability::StableNode | Stability::StableSpiral)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stability::StableNode => "stable node",
            Stability::StableSpiral => "stable spiral",
            Stability::Saddle => "saddle",
            Stability::UnstableNode => "unstable node",
            Stability::UnstableSpiral => "unstable spiral",
            Stability::Marginal => "marginal",
        }
    }
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub state: MobilityState,
    pub classification: Stability,
    pub eigenvalues: [Complex64; 2],
    /// Max-norm of the right-hand side at `state`.
    pub residual: f64,
}

/// Eigenvalues of a real 2×2 matrix, larger real part first.
pub fn eigenvalues_2x2(m: &Jacobian) -> [Complex64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let half = 0.5 * tr;
    let disc = half * half - det;
    if disc >= 0.0 {
        let root = disc.sqrt();
        // Compute the larger-magnitude root directly and the other through the
        // product so that a tiny eigenvalue is not lost to cancellation.
        let big = if half >= 0.0 { half + root } else { half - root };
        let small = if big != 0.0 { det / big } else { 0.0 };
        let (hi, lo) = if big >= small { (big, small) } else { (small, big) };
        [Complex64::new(hi, 0.0), Complex64::new(lo, 0.0)]
    } else {
        let im = (-disc).sqrt();
        [Complex64::new(half, im), Complex64::new(half, -im)]
    }
}

/// Classifies a fixed point from its Jacobian eigenvalues.
pub fn classify(eigs: &[Complex64; 2]) -> Stability {
    let marginal = eigs
        .iter()
        .any(|l| l.re.abs() < 1e-9 * (l.norm() + 1.0));
    if marginal {
        return Stability::Marginal;
    }
    let complex = eigs[0].im != 0.0;
    let (a, b) = (eigs[0].re, eigs[1].re);
    match (complex, a < 0.0, b < 0.0) {
        (true, true, _) => Stability::StableSpiral,
        (true, false, _) => Stability::UnstableSpiral,
        (false, true, true) => Stability::StableNode,
        (false, false, false) => Stability::UnstableNode,
        _ => Stability::Saddle,
    }
}

fn fixed_point(state: MobilityState, params: &ModelParams) -> FixedPoint {
    let [dc, da] = params.eval(state.congestion, state.adoption);
    let eigenvalues = eigenvalues_2x2(&jacobian_raw(state, params));
    FixedPoint {
        state,
        classification: classify(&eigenvalues),
        eigenvalues,
        residual: dc.abs().max(da.abs()),
    }
}

/// Residual bound a fixed point of `params` must satisfy.
pub fn residual_scale(params: &ModelParams) -> f64 {
    1.0_f64.max(params.k2.abs()).max(params.k3 * params.a_max)
}

/// All real fixed points of the model, highest adoption first.
///
/// Setting both derivatives to zero and eliminating `C = k2 / (k1 A)` gives
/// `A² - A_max A + k2 k4 / (k1 k3) = 0`. With `k2 = 0` the elimination is
/// replaced by the case split `C = 0` or `A = 0`.
pub fn equilibria(params: &ModelParams) -> Result<Vec<FixedPoint>> {
    params.validate()?;
    if params.k1 == 0.0 {
        return Err(Error::Degenerate(
            "k1 = 0 decouples congestion from adoption; fixed points require k1 > 0".into(),
        ));
    }
    if params.k3 == 0.0 {
        return Err(Error::Degenerate(
            "k3 = 0 removes adoption growth; fixed points require k3 > 0".into(),
        ));
    }
    let p = params;

    let mut states = Vec::with_capacity(2);
    if p.k2 == 0.0 {
        // C = 0 forces A = A_max.
        states.push(MobilityState::new(0.0, p.a_max));
        // A = 0 forces k3 A_max = k4 C.
        if p.k4 > 0.0 {
            states.push(MobilityState::new(p.k3 * p.a_max / p.k4, 0.0));
        }
    } else {
        let product = p.k2 * p.k4 / (p.k1 * p.k3);
        let disc = p.a_max * p.a_max - 4.0 * product;
        if disc < 0.0 {
            return Ok(Vec::new());
        }
        let high = 0.5 * (p.a_max + disc.sqrt());
        let mut roots = vec![high];
        if disc > 0.0 {
            // Vieta keeps the small root accurate.
            roots.push(product / high);
        }
        for a in roots {
            states.push(MobilityState::new(p.k2 / (p.k1 * a), a));
        }
    }

    Ok(states.into_iter().map(|s| fixed_point(s, p)).collect())
}
