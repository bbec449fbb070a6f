mod common;

use common::oracle_final;
use mobisim_core::{
    integrate, preset, presets, simulate, Horizon, IntegratorConfig, MobilityState, ModelParams,
};

fn reference(spec_name: &str, t_end: f64) -> MobilityState {
    let spec = preset(spec_name).unwrap();
    let sol = integrate(
        spec.initial,
        &spec.params,
        &Horizon::new(0.0, t_end, 2),
        &IntegratorConfig::adaptive(1e-12, 1e-14),
    )
    .unwrap();
    sol.trajectory.final_state()
}

fn max_err(a: MobilityState, b: MobilityState) -> f64 {
    (a.congestion - b.congestion)
        .abs()
        .max((a.adoption - b.adoption).abs())
}

#[test]
fn rk4_global_error_is_fourth_order() {
    let spec = preset("scenario-1").unwrap();
    let truth = reference("scenario-1", 1.0);
    let err = |h: f64| {
        let sol = integrate(
            spec.initial,
            &spec.params,
            &Horizon::new(0.0, 1.0, 2),
            &IntegratorConfig::fixed(h),
        )
        .unwrap();
        max_err(sol.trajectory.final_state(), truth)
    };
    let ratio = err(0.1) / err(0.05);
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn reference_agrees_with_oracle() {
    // The adaptive reference itself, checked against a very fine fixed-step run.
    let spec = preset("scenario-1").unwrap();
    let y = oracle_final([100.0, 10.0], 1.0, 1e-4, &spec.params);
    let r = reference("scenario-1", 1.0);
    assert!((r.congestion - y[0]).abs() < 1e-10);
    assert!((r.adoption - y[1]).abs() < 1e-10);
}

#[test]
fn fixed_and_adaptive_agree_on_presets() {
    for spec in presets() {
        let h = Horizon::new(0.0, 100.0, 2);
        let fixed = integrate(spec.initial, &spec.params, &h, &IntegratorConfig::fixed(0.001))
            .unwrap()
            .trajectory
            .final_state();
        let adaptive = integrate(spec.initial, &spec.params, &h, &IntegratorConfig::adaptive(1e-8, 1e-10))
            .unwrap()
            .trajectory
            .final_state();
        for (a, b) in [
            (fixed.congestion, adaptive.congestion),
            (fixed.adoption, adaptive.adoption),
        ] {
            assert!((a - b).abs() <= 1e-5 * a.abs().max(b.abs()), "{}: {a} vs {b}", spec.name);
        }
    }
}

#[test]
fn preset_defaults_match_reference() {
    for spec in presets() {
        let got = simulate(&spec).unwrap().trajectory.final_state();
        let want = reference(&spec.name, 100.0);
        assert!(max_err(got, want) < 1e-6, "{}", spec.name);
    }
}

#[test]
fn final_congestion_ordering() {
    let c: Vec<f64> = ["scenario-1", "scenario-2", "scenario-3", "scenario-4"]
        .iter()
        .map(|n| reference(n, 100.0).congestion)
        .collect();
    assert!(c[0] < c[2] && c[2] < c[1] && c[1] < c[3], "{c:?}");
    assert!((c[0] - 0.060).abs() <= 0.02 * 0.060, "{}", c[0]);
}

#[test]
fn dense_output_between_steps() {
    let spec = preset("scenario-2").unwrap();
    let sol = integrate(
        spec.initial,
        &spec.params,
        &Horizon::new(0.0, 10.0, 11),
        &IntegratorConfig::adaptive(1e-10, 1e-12),
    )
    .unwrap();
    let dense = sol.dense.expect("adaptive runs keep dense output");
    for t in [0.37, 2.5, 4.21, 7.77] {
        let y = oracle_final([100.0, 10.0], t, 1e-5, &spec.params);
        let d = dense.evaluate(t).unwrap();
        assert!((d.congestion - y[0]).abs() <= 1e-6 * y[0].abs().max(1.0), "t={t}");
        assert!((d.adoption - y[1]).abs() <= 1e-6 * y[1].abs().max(1.0), "t={t}");
    }
}

#[test]
fn grid_is_exact() {
    let h = Horizon::new(0.3, 17.9, 37);
    let spec = preset("scenario-3").unwrap();
    for cfg in [IntegratorConfig::fixed(0.05), IntegratorConfig::adaptive(1e-8, 1e-10)] {
        let tr = integrate(spec.initial, &spec.params, &h, &cfg).unwrap().trajectory;
        assert_eq!(tr.times.len(), 37);
        for (i, &t) in tr.times.iter().enumerate().take(36) {
            assert_eq!(t, 0.3 + (i as f64 * (17.9 - 0.3)) / 36.0);
        }
        assert_eq!(tr.times[36], 17.9);
    }
}

#[test]
fn runs_are_bit_identical() {
    for spec in presets() {
        let a = simulate(&spec).unwrap().trajectory;
        let b = simulate(&spec).unwrap().trajectory;
        assert_eq!(a, b);
        let mut ad = spec.clone();
        ad.integrator = IntegratorConfig::adaptive(1e-8, 1e-10);
        let a = simulate(&ad).unwrap();
        let b = simulate(&ad).unwrap();
        assert_eq!(a.trajectory, b.trajectory);
        assert_eq!(a.dense, b.dense);
    }
}

#[test]
fn negative_flag_tracks_states() {
    // Output every step so the recorded states are the accepted ones.
    let h = Horizon::new(0.0, 2.0, 21);
    let cfg = IntegratorConfig::fixed(0.1);
    let drag = ModelParams::new(0.01, 1.0, 0.05, 0.5, 100.0);
    let tr = integrate(MobilityState::new(100.0, 10.0), &drag, &h, &cfg)
        .unwrap()
        .trajectory;
    assert!(tr.states.iter().any(|s| s.adoption < 0.0));
    assert!(tr.diagnostics.adoption_went_negative);

    let spec = preset("scenario-1").unwrap();
    let tr = integrate(spec.initial, &spec.params, &h, &cfg).unwrap().trajectory;
    assert!(tr.states.iter().all(|s| s.adoption >= 0.0 && s.congestion >= 0.0));
    assert!(!tr.diagnostics.adoption_went_negative);
    assert!(!tr.diagnostics.congestion_went_negative);
}
