use proptest::prelude::*;
use schauder_core::error::LabError;
use schauder_core::integrability::*;
use schauder_core::kernel::kernel_field;
use schauder_core::spectral_models::StableModel;

#[test]
fn zeroth_moment_scales_like_gamma_over_alpha() {
    let m = StableModel::isotropic(0.7, 1).unwrap();
    let p = moment_probes(&m, 0.2, &[0], &time_ladder(6), 1 << 16).unwrap();
    assert!((p[0].fitted_slope - 0.2 / 0.7).abs() < 0.05, "{}", p[0].fitted_slope);
    assert!(p[0].integrals.iter().all(|&v| v > 0.0));
}

#[test]
fn pbeta_examples() {
    let iso = StableModel::isotropic(0.6, 1).unwrap();
    let r = pbeta_report(&iso, 0.8, &time_ladder(6), 1 << 16).unwrap();
    assert!(r.pass);
    assert!((r.first.fitted_slope + 1.0 / 3.0).abs() < 0.05);
    assert!((r.second.fitted_slope + 2.0).abs() < 0.05);
    let cyl = StableModel::cylindrical(0.7, vec![1.0, 1.0]).unwrap();
    let r = pbeta_report(&cyl, 0.5, &time_ladder(6), 512).unwrap();
    assert!(r.pass, "{:?}", r.first.fitted_slope);
    assert!(matches!(pbeta_report(&cyl, 0.7, &time_ladder(6), 512), Err(LabError::Divergent(_))));
    let tr = StableModel::truncated(0.7, 1, 1.0).unwrap();
    assert!(pbeta_report(&tr, 0.8, &time_ladder(6), 1 << 12).is_err());
}

#[test]
fn cylindrical_moment_at_alpha_diverges() {
    let cyl = StableModel::cylindrical(0.6, vec![1.0, 1.0]).unwrap();
    let d = cylindrical_divergence(&cyl, 0.6, 1, 1.0, &[10.0, 100.0, 1000.0]).unwrap();
    assert!(d.divergent, "{:?}", d.growth);
    assert!(d.integrals.windows(2).all(|w| w[1] > w[0]));
    let c = cylindrical_divergence(&cyl, 0.3, 1, 1.0, &[10.0, 100.0, 1000.0, 10000.0]).unwrap();
    assert!(!c.divergent, "{:?}", c.growth);
}

#[test]
fn moments_monotone_in_gamma_away_from_origin() {
    let m = StableModel::isotropic(0.7, 1).unwrap();
    let f = kernel_field(&m, 1.0, 1 << 14).unwrap();
    for k in 0..3 {
        let mag = derivative_magnitude(&f, k);
        let mut prev = 0.0;
        for j in 0..=10 {
            let g = j as f64 / 10.0;
            let v: f64 = mag
                .iter()
                .enumerate()
                .filter(|(i, _)| f.grid.coord(*i).abs() >= 1.0)
                .map(|(i, &v)| f.grid.coord(i).abs().powf(g) * v)
                .sum();
            assert!(v >= prev);
            prev = v;
        }
    }
}

#[test]
fn relativistic_derivative_domination() {
    let r1 = StableModel::relativistic(0.7, 1, 1.0).unwrap();
    let r0 = StableModel::relativistic(0.7, 1, 0.0).unwrap();
    for t in [0.125, 0.5, 1.0] {
        let a = moment_integral(&kernel_field(&r1, t, 1 << 14).unwrap(), 0.9, 1).unwrap().value;
        let b = moment_integral(&kernel_field(&r0, t, 1 << 14).unwrap(), 0.9, 1).unwrap().value;
        assert!(a <= 1f64.exp() * b + 1e-6, "{t} {a} {b}");
    }
}

#[test]
fn relativistic_small_time_exponents() {
    let r = StableModel::relativistic(0.7, 1, 1.0).unwrap();
    let ladder: Vec<f64> = (6..=12).rev().map(|j| 2f64.powi(-j)).collect();
    let rep = pbeta_report(&r, 0.9, &ladder, 1 << 15).unwrap();
    assert!(rep.pass, "{} {}", rep.first.fitted_slope, rep.second.fitted_slope);
}

#[test]
fn kolokoltsov_envelopes_are_stable() {
    for d in [1usize, 2] {
        let m = StableModel::isotropic(0.7, d).unwrap();
        let n = if d == 1 { 1 << 14 } else { 512 };
        let env: Vec<Envelopes> = [0.25, 0.5, 1.0]
            .iter()
            .map(|&t| kolokoltsov_check(&kernel_field(&m, t, n).unwrap(), 1.0).unwrap())
            .collect();
        assert!(env.iter().all(|e| e.finite()));
        assert!(envelope_spread(&env).iter().all(|&s| s <= 0.2));
        let fine = kolokoltsov_check(&kernel_field(&m, 1.0, 2 * n).unwrap(), 1.0).unwrap();
        for (a, b) in env[2].as_array().iter().zip(fine.as_array()) {
            assert!((a / b - 1.0).abs() <= 0.05);
        }
    }
    let cyl = StableModel::cylindrical(0.7, vec![1.0, 1.0]).unwrap();
    assert!(kolokoltsov_check(&kernel_field(&cyl, 1.0, 256).unwrap_or_else(|_| kernel_field(&cyl, 1.0, 1024).unwrap()), 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn moment_of_derivatives_scale_exactly(alpha in 0.55f64..0.9, gfrac in 0.0f64..1.0, k in 1usize..3, t in 0.05f64..1.0) {
        let gamma = gfrac;
        let m = StableModel::isotropic(alpha, 1).unwrap();
        let a = moment_integral(&kernel_field(&m, t, 1 << 13).unwrap(), gamma, k);
        let b = moment_integral(&kernel_field(&m, 1.0, 1 << 13).unwrap(), gamma, k);
        if let (Ok(a), Ok(b)) = (a, b) {
            let pred = b.value * t.powf((gamma - k as f64) / alpha);
            prop_assert!((a.value / pred - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn envelopes_are_positive(alpha in 0.55f64..0.9, t in 0.1f64..1.0, k in 0.5f64..2.0) {
        let m = StableModel::isotropic(alpha, 1).unwrap();
        let e = kolokoltsov_check(&kernel_field(&m, t, 1 << 12).unwrap(), k).unwrap();
        prop_assert!(e.finite());
        prop_assert!(e.gradient >= 0.0);
    }
}
