//! Plain Nelder–Mead simplex minimizer.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Offset added to each coordinate in turn to build the initial simplex.
    pub initial_step: f64,
    /// Converged when every vertex is within this max-norm distance of the best one.
    pub x_tol: f64,
    /// Converged when `f_worst - f_best < f_rel_tol * (1 + |f_best|)`.
    pub f_rel_tol: f64,
    pub max_iterations: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_step: 0.05,
            x_tol: 1e-10,
            f_rel_tol: 1e-14,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    /// One per reflect/expand/contract/shrink decision.
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Objective values of the initial simplex.
    pub initial_values: Vec<f64>,
}

struct Vertex {
    x: Vec<f64>,
    f: f64,
}

fn nan_to_inf(f: f64) -> f64 {
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

/// Minimizes `f` from `x0`. NaN objective values are treated as `+inf`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    opts: &NelderMeadOptions,
) -> NelderMeadResult {
    let n = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        nan_to_inf(f(x))
    };

    let mut simplex: Vec<Vertex> = Vec::with_capacity(n + 1);
    simplex.push(Vertex {
        x: x0.to_vec(),
        f: eval(x0),
    });
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        let fx = eval(&x);
        simplex.push(Vertex { x, f: fx });
    }
    let initial_values = simplex.iter().map(|v| v.f).collect();
    let sort = |s: &mut Vec<Vertex>| s.sort_by(|a, b| a.f.total_cmp(&b.f));
    sort(&mut simplex);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        let best = &simplex[0];
        let diameter = simplex[1..]
            .iter()
            .flat_map(|v| v.x.iter().zip(&best.x).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread = simplex[n].f - best.f;
        if n == 0 || diameter < opts.x_tol || spread < opts.f_rel_tol * (1.0 + best.f.abs()) {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(&v.x) {
                *c += xi / n as f64;
            }
        }
        let along = |t: f64, from: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(from)
                .map(|(c, x)| c + t * (x - c))
                .collect()
        };

        let worst_x = simplex[n].x.clone();
        let xr = along(-opts.reflection, &worst_x);
        let fr = eval(&xr);

        if fr < simplex[0].f {
            let xe = along(-opts.reflection * opts.expansion, &worst_x);
            let fe = eval(&xe);
            simplex[n] = if fe < fr {
                Vertex { x: xe, f: fe }
            } else {
                Vertex { x: xr, f: fr }
            };
        } else if fr < simplex[n - 1].f {
            simplex[n] = Vertex { x: xr, f: fr };
        } else {
            let (xc, fc, accept) = if fr < simplex[n].f {
                let xc = along(-opts.reflection * opts.contraction, &worst_x);
                let fc = eval(&xc);
                let ok = fc <= fr;
                (xc, fc, ok)
            } else {
                let xc = along(opts.contraction, &worst_x);
                let fc = eval(&xc);
                let ok = fc < simplex[n].f;
                (xc, fc, ok)
            };
            if accept {
                simplex[n] = Vertex { x: xc, f: fc };
            } else {
                let best_x = simplex[0].x.clone();
                for v in simplex.iter_mut().skip(1) {
                    for (xi, bi) in v.x.iter_mut().zip(&best_x) {
                        *xi = bi + opts.shrink * (*xi - bi);
                    }
                    v.f = eval(&v.x);
                }
            }
        }
        sort(&mut simplex);
    }

    let best = simplex.swap_remove(0);
    NelderMeadResult {
        x: best.x,
        f: best.f,
        iterations,
        evaluations,
        converged,
        initial_values,
    }
}
