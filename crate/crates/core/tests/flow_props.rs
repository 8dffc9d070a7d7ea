use proptest::prelude::*;
use schauder_core::flow::*;

fn cusp() -> DriftField {
    DriftField::holder_cusp(1, 1.0, 0.6, &[0.0]).unwrap()
}

#[test]
fn mollification_error_within_holder_bound() {
    let f = DriftField::holder_cusp(1, 1.0, 0.5, &[0.0]).unwrap();
    let fd = mollify(&f, 0.1).unwrap();
    let bound = 0.1f64.powf(0.5);
    let mut worst: f64 = 0.0;
    for i in 0..4001 {
        let x = -2.0 + i as f64 * 1e-3;
        worst = worst.max((fd.eval(0.0, [x, 0.0])[0] - f.eval(0.0, [x, 0.0])[0]).abs());
    }
    assert!(worst <= bound, "{worst} {bound}");
    for delta in [0.2, 0.1, 0.05] {
        let fd = mollify(&f, delta).unwrap();
        let g = (0..400).map(|i| fd.gradient_probe(0.0, [-1.0 + i as f64 * 0.005, 0.0], 1e-4 * delta)).fold(0.0, f64::max);
        assert!(g <= 1.1 * delta.powf(0.5 - 1.0), "{delta} {g}");
    }
}

#[test]
fn shift_identity_and_affinity() {
    let f = DriftField::shifted_sin(1, 0.3, 1.0, 0.5).unwrap();
    let x = [0.4, 0.0];
    let m = frozen_shift(&f, 0.2, x, 0.2, 0.9, x, 1e-3).unwrap();
    let theta = integrate_flow(&f, 0.2, &[0.4], 0.9, 1e-3).unwrap().end();
    assert!((m[0] - theta[0]).abs() < 1e-6);
    let a = frozen_shift(&f, 0.0, [1.0, 0.0], 0.3, 0.8, [0.5, 0.0], 1e-3).unwrap();
    let b = frozen_shift(&f, 0.0, [1.0, 0.0], 0.3, 0.8, [0.75, 0.0], 1e-3).unwrap();
    assert!((b[0] - a[0] - 0.25).abs() < 1e-12);
    let c = DriftField::constant(&[2.0, -1.0], 0.5).unwrap();
    let m = frozen_shift(&c, 0.0, [0.0, 0.0], 0.25, 0.75, [1.0, 1.0], 1e-2).unwrap();
    assert!((m[0] - 2.0).abs() < 1e-13 && (m[1] - 0.5).abs() < 1e-13);
}

#[test]
fn linear_pair_ratio_is_exact() {
    let f = DriftField::linear(&[1.0], 1, 0.5).unwrap();
    let p = FlowPair { t: 0.2, s: 0.7, x: [0.3, 0.0], y: [0.4, 0.0] };
    let r = flow_stability_check(&f, 0.7, &[p], 1e-3).unwrap();
    let exact = 0.1 * 0.5f64.exp() / (0.1 + 0.5f64.powf(1.0 / 0.7));
    assert!((r.max_ratio - exact).abs() < 1e-8);
}

#[test]
fn zero_drift_ratio_below_one() {
    let f = DriftField::zero(2, 0.6).unwrap();
    let pairs = random_pairs(100, 2, 1.0, 3.0, 1.0, 3);
    let r = flow_stability_check(&f, 0.6, &pairs, 1e-2).unwrap();
    assert!(r.ratios.iter().all(|&v| v <= 1.0));
    assert!(flow_stability_check(&f, 0.3, &pairs, 1e-2).is_err());
}

#[test]
fn holder_flow_stability_is_step_stable() {
    let pairs = random_pairs(500, 1, 1.0, 2.0, 1.0, 7);
    let r = flow_stability_check(&cusp(), 0.6, &pairs, 2e-3).unwrap();
    assert!(r.max_ratio.is_finite() && r.stable, "{} {} {}", r.max_ratio, r.max_ratio_halved, r.relative_change);
}

#[test]
fn mollified_trajectories_converge() {
    let f = cusp();
    let x0 = [0.05, 0.0];
    let end = |d: f64| trajectory(&mollify(&f, d).unwrap(), 0.0, x0, 1.0, 1e-3).unwrap().end()[0];
    let reference = trajectory(&mollify(&f, 1e-4).unwrap(), 0.0, x0, 1.0, 1e-4).unwrap().end()[0];
    for d in [0.1, 0.05, 0.025] {
        let e = (end(d) - reference).abs();
        assert!(e <= 1.0f64.exp() * d.powf(0.6), "{d} {e}");
    }
}

#[test]
fn semigroup_property_for_smooth_drift() {
    let f = DriftField::shifted_sin(2, 0.5, 1.0, 0.5).unwrap();
    let a = trajectory(&f, 0.0, [0.3, -0.2], 0.4, 1e-3).unwrap().end();
    let b = trajectory(&f, 0.4, a, 1.0, 1e-3).unwrap().end();
    let c = trajectory(&f, 0.0, [0.3, -0.2], 1.0, 1e-3).unwrap().end();
    assert!((b[0] - c[0]).abs() < 1e-9 && (b[1] - c[1]).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_holder_bound_holds(k0 in 0.1f64..3.0, beta in 0.1f64..0.95, c in -1.0f64..1.0, seed in 0u64..1000) {
        for f in [
            DriftField::holder_bump(1, k0, beta, &[c]).unwrap(),
            DriftField::holder_cusp(2, k0, beta, &[c, -c]).unwrap(),
            DriftField::shifted_sin(2, 10.0 * c, k0, beta).unwrap(),
        ] {
            prop_assert!(f.holder_probe(200, 3.0, seed) <= 1.01 * f.k0);
        }
    }

    #[test]
    fn mollified_bound_on_random_points(delta in 0.01f64..0.5, beta in 0.2f64..0.9, x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let f = DriftField::holder_cusp(2, 1.0, beta, &[0.1, 0.0]).unwrap();
        let g = mollify(&f, delta).unwrap();
        let (a, b) = (f.eval(0.0, [x, y]), g.eval(0.0, [x, y]));
        prop_assert!((a[0] - b[0]).abs() <= delta.powf(beta) * (1.0 + 1e-12));
    }

    #[test]
    fn shift_is_affine(x in -3.0f64..3.0, v in -1.0f64..1.0, t in 0.0f64..0.5, s in 0.5f64..1.0) {
        let f = DriftField::holder_bump(1, 1.0, 0.6, &[0.0]).unwrap();
        let a = frozen_shift(&f, 0.0, [0.2, 0.0], t, s, [x, 0.0], 1e-2).unwrap();
        let b = frozen_shift(&f, 0.0, [0.2, 0.0], t, s, [x + v, 0.0], 1e-2).unwrap();
        prop_assert!((b[0] - a[0] - v).abs() < 1e-12);
    }
}
