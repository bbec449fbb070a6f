use mobisim_core::analysis::{
    calibrate, calibrate_multistart, evaluate_metric, sensitivity, sensitivity_with_step, sweep,
    CalibrationProblem, Metric, RowOutcome, Scheme, SweepSpec,
};
use mobisim_core::io::Samples;
use mobisim_core::{preset, simulate, Horizon, ModelParams, ParamKey};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn values(rows: &[mobisim_core::analysis::SweepRow]) -> Vec<f64> {
    rows.iter().map(|r| r.outcome.value().expect("row has a value")).collect()
}

#[test]
fn k3_sweep_lowers_final_congestion() {
    let base = preset("scenario-3").unwrap();
    let spec = SweepSpec::linspace(ParamKey::K3, 0.01, 0.12, 12, Metric::FinalCongestion);
    let v = values(&sweep(&base, &spec).unwrap());
    assert_eq!(v.len(), 12);
    assert!(v.windows(2).all(|w| w[1] < w[0]), "{v:?}");
}

#[test]
fn k2_sweep_raises_final_congestion() {
    let base = preset("scenario-1").unwrap();
    let spec = SweepSpec {
        parameter: ParamKey::K2,
        values: vec![0.3, 0.6, 1.2],
        metric: Metric::FinalCongestion,
    };
    let v = values(&sweep(&base, &spec).unwrap());
    assert!(v[0] < v[1] && v[1] < v[2], "{v:?}");
}

#[test]
fn sweep_rows_equal_standalone_runs() {
    let base = preset("scenario-2").unwrap();
    for metric in [Metric::FinalAdoption, Metric::TimeToAdoptionLevel(50.0), Metric::PeakCongestion] {
        let spec = SweepSpec::linspace(ParamKey::K1, 0.01, 0.05, 5, metric);
        for row in sweep(&base, &spec).unwrap() {
            let alone = evaluate_metric(&ParamKey::K1.with(&base, row.value), metric).unwrap();
            assert_eq!(row.outcome.value().map(f64::to_bits), alone.map(f64::to_bits));
        }
    }
}

#[test]
fn sweep_records_unreached_levels_and_failures() {
    let base = preset("scenario-1").unwrap();
    let spec = SweepSpec {
        parameter: ParamKey::K3,
        values: vec![0.1, 0.0],
        metric: Metric::TimeToAdoptionLevel(50.0),
    };
    let rows = sweep(&base, &spec).unwrap();
    assert!(matches!(rows[0].outcome, RowOutcome::Value(_)));
    assert_eq!(rows[1].outcome, RowOutcome::NoEvent);

    let spec = SweepSpec {
        parameter: ParamKey::K1,
        values: vec![0.05, -1.0],
        metric: Metric::FinalCongestion,
    };
    let rows = sweep(&base, &spec).unwrap();
    assert!(matches!(rows[1].outcome, RowOutcome::Failed(ref m) if m.contains("k1")));
}

#[test]
fn sensitivity_signs_on_scenario_one() {
    let base = preset("scenario-1").unwrap();
    let rows = sensitivity(&base, Metric::FinalCongestion, &ParamKey::RATES).unwrap();
    let d = |k: ParamKey| rows.iter().find(|r| r.parameter == k).unwrap().derivative.unwrap();
    assert!(d(ParamKey::K2) > 0.0);
    assert!(d(ParamKey::K1) < 0.0);
    assert!(rows.iter().all(|r| r.scheme == Scheme::Central));
}

#[test]
fn sensitivity_is_step_stable() {
    let base = preset("scenario-1").unwrap();
    let a = sensitivity_with_step(&base, Metric::FinalCongestion, &ParamKey::RATES, 1e-4).unwrap();
    let b = sensitivity_with_step(&base, Metric::FinalCongestion, &ParamKey::RATES, 5e-5).unwrap();
    for (x, y) in a.iter().zip(&b) {
        let (x, y) = (x.derivative.unwrap(), y.derivative.unwrap());
        assert!((x - y).abs() < 0.05 * x.abs(), "{x} vs {y}");
    }
}

#[test]
fn sensitivity_at_zero_uses_forward_difference() {
    let mut base = preset("scenario-1").unwrap();
    base.params.k4 = 0.0;
    let rows = sensitivity(&base, Metric::FinalCongestion, &[ParamKey::K4]).unwrap();
    assert_eq!(rows[0].scheme, Scheme::Forward);
    assert!(rows[0].derivative.unwrap() > 0.0);
}

fn scenario_two_problem(guess: ModelParams) -> (CalibrationProblem, ModelParams) {
    let mut spec = preset("scenario-2").unwrap();
    spec.horizon = Horizon::new(0.0, 100.0, 21);
    let tr = simulate(&spec).unwrap().trajectory;
    let samples = Samples {
        times: tr.times.clone(),
        states: tr.states.clone(),
    };
    let problem =
        CalibrationProblem::from_samples(&samples, ParamKey::RATES.to_vec(), guess, spec.integrator)
            .unwrap();
    (problem, spec.params)
}

fn scaled(p: ModelParams, f: [f64; 4]) -> ModelParams {
    ModelParams::new(p.k1 * f[0], p.k2 * f[1], p.k3 * f[2], p.k4 * f[3], p.a_max)
}

fn within(fit: &ModelParams, truth: &ModelParams, tol: f64) -> bool {
    ParamKey::RATES.iter().all(|k| {
        let (a, b) = (k.param_value(fit).unwrap(), k.param_value(truth).unwrap());
        (a - b).abs() <= tol * b
    })
}

#[test]
fn calibration_recovers_scenario_two() {
    let truth = preset("scenario-2").unwrap().params;
    let (problem, truth2) = scenario_two_problem(scaled(truth, [1.5; 4]));
    assert_eq!(truth, truth2);
    let fit = calibrate(&problem).unwrap();
    assert!(within(&fit.params, &truth, 0.01), "{:?}", fit.params);
}

#[test]
fn calibration_from_truth_stays_put() {
    let truth = preset("scenario-2").unwrap().params;
    let (problem, _) = scenario_two_problem(truth);
    assert_eq!(problem.objective(&truth), 0.0);
    let fit = calibrate(&problem).unwrap();
    assert!(fit.objective <= 1e-16 * 42.0, "{}", fit.objective);
    assert!(within(&fit.params, &truth, 1e-6));
}

#[test]
fn calibration_from_random_guesses() {
    let truth = preset("scenario-2").unwrap().params;
    let (problem, _) = scenario_two_problem(truth);
    let guesses: Vec<ModelParams> = (1..=10u64)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut f = [0.0; 4];
            for x in &mut f {
                *x = 2f64.powf(rng.gen_range(-1.0..=1.0));
            }
            scaled(truth, f)
        })
        .collect();
    let ok = calibrate_multistart(&problem, &guesses)
        .into_iter()
        .filter(|r| r.as_ref().is_ok_and(|r| within(&r.params, &truth, 0.01)))
        .count();
    assert!(ok >= 8, "{ok}/10 recovered");
}
