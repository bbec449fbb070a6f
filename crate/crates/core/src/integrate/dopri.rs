//! Dormand–Prince 5(4) with its fourth-order continuous extension.

use super::dense::DenseSegment;
use crate::model::ModelParams;

/// Stage nodes. The model is autonomous, so only the tests read them.
#[cfg(test)]
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

pub(crate) const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    // FSAL row: equals the fifth-order weights.
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

/// Fifth-order weights (propagated solution).
pub(crate) const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];

/// Fourth-order embedded weights.
#[cfg(test)]
const B_HAT: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// `B - B_HAT`, kept as its own exact table so the error estimate does not
/// suffer cancellation.
pub(crate) const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Continuous-extension weights for the quartic correction term.
pub(crate) const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

pub(crate) struct Attempt {
    pub y_new: [f64; 2],
    pub f_new: [f64; 2],
    pub err: [f64; 2],
    pub stages: [[f64; 2]; 7],
}

/// Runs all stages of one trial step of size `h`. `f0` is the derivative at `y`.
pub(crate) fn attempt(y: [f64; 2], f0: [f64; 2], h: f64, p: &ModelParams) -> Attempt {
    let mut k = [[0.0; 2]; 7];
    k[0] = f0;
    for s in 1..7 {
        let mut ys = y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                ys[0] += h * a * kj[0];
                ys[1] += h * a * kj[1];
            }
        }
        k[s] = p.eval(ys[0], ys[1]);
    }
    let mut y_new = y;
    let mut err = [0.0; 2];
    for i in 0..2 {
        let mut acc = 0.0;
        let mut e = 0.0;
        for s in 0..7 {
            acc += B[s] * k[s][i];
            e += E[s] * k[s][i];
        }
        y_new[i] += h * acc;
        err[i] = h * e;
    }
    Attempt {
        y_new,
        f_new: k[6],
        err,
        stages: k,
    }
}

/// Scaled RMS norm of the local error estimate.
pub(crate) fn error_norm(y: [f64; 2], at: &Attempt, rtol: f64, atol: f64) -> f64 {
    let sum: f64 = (0..2)
        .map(|i| {
            let sc = atol + rtol * y[i].abs().max(at.y_new[i].abs());
            let r = at.err[i] / sc;
            r * r
        })
        .sum();
    (sum / 2.0).sqrt()
}

pub(crate) fn segment(t: f64, h: f64, y: [f64; 2], at: &Attempt, t_right: f64) -> DenseSegment {
    let k = &at.stages;
    let mut coeffs = [[0.0; 2]; 3];
    for i in 0..2 {
        let delta = at.y_new[i] - y[i];
        let b = h * k[0][i] - delta;
        coeffs[0][i] = b;
        coeffs[1][i] = delta - h * at.f_new[i] - b;
        let mut d = 0.0;
        for s in 0..7 {
            d += D[s] * k[s][i];
        }
        coeffs[2][i] = h * d;
    }
    DenseSegment::from_parts(t, t_right, y, at.y_new, coeffs)
}

/// Step-size factor `min(5, max(0.2, 0.9 err^(-1/5)))`.
pub(crate) fn step_factor(err: f64) -> f64 {
    if err == 0.0 {
        return 5.0;
    }
    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
}
