use crate::error::{Error, Result};
use crate::model::{MobilityState, ModelParams};

/// One classical RK4 step on raw arrays. `None` if any stage is non-finite.
#[inline]
pub(crate) fn rk4_raw(y: [f64; 2], h: f64, p: &ModelParams) -> Option<[f64; 2]> {
    let k1 = p.eval(y[0], y[1]);
    let k2 = p.eval(y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]);
    let k3 = p.eval(y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]);
    let k4 = p.eval(y[0] + h * k3[0], y[1] + h * k3[1]);
    let finite = |k: [f64; 2]| k[0].is_finite() && k[1].is_finite();
    if !(finite(k1) && finite(k2) && finite(k3) && finite(k4)) {
        return None;
    }
    let out = [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ];
    (out[0].is_finite() && out[1].is_finite()).then_some(out)
}

/// One classical fourth-order Runge–Kutta step of size `h` from `(t, state)`.
///
/// The model is autonomous; `t` is only carried for error reporting.
pub fn step_rk4(
    state: MobilityState,
    t: f64,
    h: f64,
    params: &ModelParams,
) -> Result<MobilityState> {
    state.validate()?;
    params.validate()?;
    if !t.is_finite() {
        return Err(Error::domain("t", "must be finite"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::domain("h", "step must be positive and finite"));
    }
    rk4_raw(state.to_array(), h, params)
        .map(MobilityState::from_array)
        .ok_or_else(|| Error::Numerical {
            t,
            h,
            reason: "non-finite Runge-Kutta stage".into(),
        })
}
