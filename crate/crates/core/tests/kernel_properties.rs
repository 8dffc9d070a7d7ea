mod common;

use schauder_core::grid::{interp1_periodic, interp2_periodic, GridSpec};
use schauder_core::kernel::*;
use schauder_core::spectral_models::StableModel;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn self_similarity_across_times() {
    for d in [1usize, 2] {
        let m = StableModel::isotropic(0.7, d).unwrap();
        let n = if d == 1 { 1 << 14 } else { 1024 };
        let g1 = admissible_grid(&m, 1.0, n, 1e-12).unwrap();
        let p1 = density_fft(&m, 1.0, &g1).unwrap();
        for t in [0.25, 0.5] {
            let g = admissible_grid(&m, t, n, 1e-12).unwrap();
            let pt = density_fft(&m, t, &g).unwrap();
            let s = t.powf(1.0 / 0.7);
            let mut worst = 0.0f64;
            for idx in 0..g.len() {
                let y = g.point(idx);
                if (y[0] * y[0] + y[1] * y[1]).sqrt() > 5.0 * s {
                    continue;
                }
                // off-lattice evaluation of the t = 1 kernel
                let z = [y[0] / s + 0.37 * g1.spacing(), y[1] / s];
                let v = if d == 1 { interp1_periodic(&g1, &p1.p, z[0]) } else { interp2_periodic(&g1, &p1.p, z) };
                let yy = [z[0] * s, z[1] * s];
                let w = if d == 1 { interp1_periodic(&g, &pt.p, yy[0]) } else { interp2_periodic(&g, &pt.p, yy) };
                worst = worst.max((w - v / s.powi(d as i32)).abs() / w.abs());
            }
            eprintln!("d={d} t={t} self-similarity {worst:e}");
            assert!(worst < 1e-3);
        }
    }
}

#[test]
fn parity_and_symmetry() {
    let m = StableModel::reference_smooth(0.6, 2).unwrap();
    let g = admissible_grid(&m, 1.0, 1024, 1e-12).unwrap();
    let f = density_fft(&m, 1.0, &g).unwrap();
    assert!(f.symmetry_defect() < 1e-10, "{}", f.symmetry_defect());
    let scale = max_abs(&f.dp);
    let scale2 = max_abs(&f.d2p);
    for idx in 0..g.len() {
        let mi = g.mirror(idx);
        if g.point(mi)[0] != -g.point(idx)[0] || g.point(mi)[1] != -g.point(idx)[1] {
            continue;
        }
        for a in 0..2 {
            assert!((f.dp[2 * idx + a] + f.dp[2 * mi + a]).abs() < 1e-10 * scale);
        }
        for a in 0..4 {
            assert!((f.d2p[4 * idx + a] - f.d2p[4 * mi + a]).abs() < 1e-9 * scale2);
        }
    }
    assert!(f.negative_ringing() > -1e-6);
}

#[test]
fn derivative_fields_match_finite_differences() {
    let m = StableModel::isotropic(0.8, 1).unwrap();
    let g = admissible_grid(&m, 1.0, 1 << 14, 1e-14).unwrap();
    let f = density_fft(&m, 1.0, &g).unwrap();
    let h = g.spacing();
    let n = g.points_per_axis;
    let d3 = (1..n - 1).map(|i| (f.d2p[i + 1] - f.d2p[i - 1]).abs() / (2.0 * h)).fold(0.0, f64::max);
    let mut worst = 0.0f64;
    for i in 1..n - 1 {
        let fd = (f.p[i + 1] - f.p[i - 1]) / (2.0 * h);
        worst = worst.max((fd - f.dp[i]).abs());
    }
    assert!(worst <= 10.0 * h * h * d3, "{worst} {}", 10.0 * h * h * d3);
}

#[test]
fn global_derivative_bound_scales() {
    let m = StableModel::isotropic(0.7, 1).unwrap();
    let mut consts = [vec![], vec![], vec![]];
    for t in [0.25, 0.5, 1.0] {
        let g = admissible_grid(&m, t, 1 << 14, 1e-14).unwrap();
        let f = density_fft(&m, t, &g).unwrap();
        for (k, arr) in [&f.p, &f.dp, &f.d2p].iter().enumerate() {
            consts[k].push(max_abs(arr) * t.powf((1.0 + k as f64) / 0.7));
        }
    }
    for c in consts {
        let c1 = c[2];
        assert!(c.iter().all(|&v| v <= 1.05 * c1 && v >= c1 / 1.05), "{c:?}");
    }
}

#[test]
fn relativistic_kernel_properties() {
    let a = 0.7;
    let g = GridSpec::new(1, 40.0, 8192).unwrap();
    let rel = StableModel::relativistic(a, 1, 1.0).unwrap();
    let zero = StableModel::relativistic(a, 1, 0.0).unwrap();
    let p = density_relativistic(&rel, 0.5, &g, 2048).unwrap();
    let p0 = density_relativistic(&zero, 0.5, &g, 2048).unwrap();
    assert!((p.total_mass() - 1.0).abs() < 2e-3, "{}", p.total_mass());
    let e = 1f64.exp();
    assert!(p.p.iter().zip(&p0.p).all(|(x, y)| *x <= e * y + 1e-4));
    assert!(density_relativistic(&rel, 0.5, &g, 32).is_err());
    assert!(StableModel::relativistic(a, 1, -1.0).is_err() || density_relativistic(&StableModel::relativistic(a, 1, -1.0).unwrap(), 0.5, &g, 128).is_err());
}

#[test]
fn relativistic_planar_massless_limit() {
    let a = 0.7;
    let g = GridSpec::new(2, 12.0, 128).unwrap();
    let rel = StableModel::relativistic(a, 2, 0.0).unwrap();
    let f = density_relativistic(&rel, 1.0, &g, 1024).unwrap();
    let o = g.origin_index();
    for (di, dj) in [(0usize, 0usize), (3, 4), (20, 9)] {
        let idx = (o + di) * 128 + o + dj;
        let x = g.point(idx);
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt().max(1e-14);
        let ex = common::hankel_2d(a, 1.0, r)[0];
        assert!((f.p[idx] - ex).abs() < 1e-5 * f.p[o * 128 + o], "{} {ex}", f.p[idx]);
    }
}

#[test]
fn truncated_kernel_has_unit_mass_and_matches_sampler() {
    let m = StableModel::truncated(0.7, 1, 2.0).unwrap();
    let g = GridSpec::new(1, 40.0, 8192).unwrap();
    let f = density_fft(&m, 1.0, &g).unwrap();
    assert!((f.total_mass() - 1.0).abs() < 1e-3, "{}", f.total_mass());
    let s = sample_stable(&m, 1.0, 200_000, 4).unwrap().coordinate(0);
    let cdf = common::grid_cdf(&f);
    let d = ks_one_sample(&s, &cdf);
    assert!(d < 1.628 / (s.len() as f64).sqrt(), "{d}");
}

#[test]
fn planar_sampler_marginal_is_one_dim_stable() {
    let m2 = StableModel::isotropic(0.7, 2).unwrap();
    let m1 = StableModel::isotropic(0.7, 1).unwrap();
    let a = sample_stable(&m2, 1.0, 100_000, 11).unwrap().coordinate(0);
    let b = sample_stable(&m1, 1.0, 100_000, 12).unwrap().coordinate(0);
    assert!(ks_two_sample(&a, &b) < ks_critical(a.len(), b.len(), 0.01));
    let c = sample_stable(&m2, 1.0, 100_000, 13).unwrap();
    let sd = winsorized_sd(&c.coordinate(1), 0.01);
    let mean = c.coordinate(1).iter().sum::<f64>() / 1e5;
    let _ = (sd, mean);
}

#[test]
fn cylindrical_marginals() {
    let m = StableModel::cylindrical(0.6, vec![1.0, 1.0]).unwrap();
    let s = sample_stable(&m, 1.0, 100_000, 21).unwrap();
    let m1 = StableModel::isotropic(0.6, 1).unwrap();
    let g = admissible_grid(&m1, 1.0, 1 << 16, 1e-9).unwrap();
    let f = density_fft(&m1, 1.0, &g).unwrap();
    let cdf = common::grid_cdf(&f);
    let x = s.coordinate(1);
    let d = ks_one_sample(&x, &cdf);
    assert!(d < 1.628 / (x.len() as f64).sqrt(), "{d}");
}
