use mobisim_core::model::residual_scale;
use mobisim_core::{equilibria, jacobian, preset, presets, rhs, MobilityState, ModelParams, Stability};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (0.0..2.0f64, 0.0..5.0f64, 0.0..1.0f64, 0.0..0.5f64, 1.0..500.0f64)
        .prop_map(|(k1, k2, k3, k4, a)| ModelParams::new(k1, k2, k3, k4, a))
}

fn state() -> impl Strategy<Value = MobilityState> {
    (0.0..200.0f64, 0.0..200.0f64).prop_map(|(c, a)| MobilityState::new(c, a))
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn jacobian_matches_central_differences(p in params(), s in state()) {
        let j = jacobian(s, &p).unwrap();
        let x = [s.congestion, s.adoption];
        for col in 0..2 {
            let h = 1e-6 * x[col].abs().max(1.0);
            let mut up = x;
            let mut dn = x;
            up[col] += h;
            dn[col] -= h;
            let fu = rhs(MobilityState::new(up[0], up[1]), &p).unwrap();
            let fd = rhs(MobilityState::new(dn[0], dn[1]), &p).unwrap();
            let fd_col = [
                (fu.d_congestion - fd.d_congestion) / (2.0 * h),
                (fu.d_adoption - fd.d_adoption) / (2.0 * h),
            ];
            for row in 0..2 {
                let an = j[row][col];
                prop_assert!(
                    (fd_col[row] - an).abs() <= 1e-5 * an.abs().max(1.0),
                    "J[{row}][{col}] analytic {an} vs fd {}", fd_col[row]
                );
            }
        }
    }

    #[test]
    fn congestion_inflow_at_zero_congestion(p in params(), a in 0.0..200.0f64) {
        let d = rhs(MobilityState::new(0.0, a), &p).unwrap();
        prop_assert_eq!(d.d_congestion, p.k2);
        if p.k2 > 0.0 {
            prop_assert!(d.d_congestion > 0.0);
        }
    }

    #[test]
    fn equilibria_satisfy_residual_and_vieta(
        k1 in 1e-3..2.0f64, k2 in 0.0..5.0f64, k3 in 1e-3..1.0f64, k4 in 0.0..0.5f64, a_max in 1.0..500.0f64
    ) {
        let p = ModelParams::new(k1, k2, k3, k4, a_max);
        let fps = equilibria(&p).unwrap();
        let scale = residual_scale(&p);
        for fp in &fps {
            let d = rhs(fp.state, &p).unwrap();
            prop_assert!(d.d_congestion.abs().max(d.d_adoption.abs()) <= 1e-9 * scale);
            if fp.state.adoption > 0.0 {
                prop_assert!(!matches!(
                    fp.classification,
                    Stability::UnstableNode | Stability::UnstableSpiral
                ));
            }
        }
        if k2 > 0.0 && fps.len() == 2 {
            let (a1, a2) = (fps[0].state.adoption, fps[1].state.adoption);
            prop_assert!(rel_close(a1 + a2, a_max, 1e-12), "sum {}", a1 + a2);
            prop_assert!(rel_close(a1 * a2, k2 * k4 / (k1 * k3), 1e-10), "product {}", a1 * a2);
        }
    }
}

#[test]
fn presets_equilibria_oracle() {
    for spec in presets() {
        let p = spec.params;
        let fps = equilibria(&p).unwrap();
        assert_eq!(fps.len(), 2, "{}", spec.name);
        let q = p.k2 * p.k4 / (p.k1 * p.k3);
        let (a1, a2) = (fps[0].state.adoption, fps[1].state.adoption);
        assert!(rel_close(a1 + a2, p.a_max, 1e-12));
        assert!(rel_close(a1 * a2, q, 1e-10));
        for fp in &fps {
            let d = rhs(fp.state, &p).unwrap();
            assert!(d.d_congestion.abs().max(d.d_adoption.abs()) <= 1e-9);
        }
        assert_eq!(fps[0].classification, Stability::StableNode, "{}", spec.name);
        assert_eq!(fps[1].classification, Stability::Saddle, "{}", spec.name);
    }
}

#[test]
fn scenario_one_and_four_stable_points() {
    // Textbook quadratic formula, independent of the library's root ordering.
    let stable = |name: &str| {
        let p = preset(name).unwrap().params;
        let q = p.k2 * p.k4 / (p.k1 * p.k3);
        let a = 0.5 * (p.a_max + (p.a_max * p.a_max - 4.0 * q).sqrt());
        (p.k2 / (p.k1 * a), a)
    };
    let (c1, a1) = stable("scenario-1");
    assert!((c1 - 0.060004).abs() <= 1e-3 * 0.060004);
    assert!((a1 - 99.994).abs() <= 1e-3 * 99.994);
    let fp = &equilibria(&preset("scenario-1").unwrap().params).unwrap()[0];
    assert!(rel_close(fp.state.congestion, c1, 1e-12));
    assert!(rel_close(fp.state.adoption, a1, 1e-12));

    let (c4, a4) = stable("scenario-4");
    assert!((c4 - 1.535).abs() < 1e-3);
    assert!((a4 - 97.697).abs() < 1e-3);
}
