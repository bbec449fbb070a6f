#![allow(dead_code)]

use mobisim_core::ModelParams;

/// Longhand RK4 used as an oracle, kept separate from the library stepper.
pub fn oracle_step(y: [f64; 2], h: f64, p: &ModelParams) -> [f64; 2] {
    let f = |c: f64, a: f64| {
        [
            -p.k1 * a * c + p.k2,
            p.k3 * (p.a_max - a) - p.k4 * c,
        ]
    };
    let k1 = f(y[0], y[1]);
    let k2 = f(y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]);
    let k3 = f(y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]);
    let k4 = f(y[0] + h * k3[0], y[1] + h * k3[1]);
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Adoption crossings of each level, found by stepping at `h` from `t0` to
/// `t_end` and interpolating linearly inside the bracketing step.
pub fn scan_crossings(
    y0: [f64; 2],
    t0: f64,
    t_end: f64,
    h: f64,
    p: &ModelParams,
    levels: &[f64],
) -> Vec<Vec<f64>> {
    let n = ((t_end - t0) / h).round() as usize;
    let mut hits = vec![Vec::new(); levels.len()];
    let mut y = y0;
    for i in 0..n {
        let ta = t0 + i as f64 * h;
        let next = oracle_step(y, h, p);
        for (j, &level) in levels.iter().enumerate() {
            let (ga, gb) = (y[1] - level, next[1] - level);
            if ga != 0.0 && (ga < 0.0) != (gb < 0.0) {
                hits[j].push(ta + h * ga / (ga - gb));
            } else if ga == 0.0 {
                hits[j].push(ta);
            }
        }
        y = next;
    }
    hits
}

/// State at `t_end` from a fixed-step oracle run.
pub fn oracle_final(y0: [f64; 2], t_end: f64, h: f64, p: &ModelParams) -> [f64; 2] {
    let n = (t_end / h).round() as usize;
    let mut y = y0;
    for _ in 0..n {
        y = oracle_step(y, h, p);
    }
    y
}
