mod common;

use schauder_core::kernel::{admissible_grid, density_fft};
use schauder_core::spectral_models::StableModel;

#[test]
fn one_dim_values_and_derivatives_match_fourier_quadrature() {
    for &a in &[0.6, 0.7, 0.8] {
        let m = StableModel::isotropic(a, 1).unwrap();
        let t = 0.5;
        let g = admissible_grid(&m, t, 1 << 15, 1e-15).unwrap();
        let f = density_fft(&m, t, &g).unwrap();
        let pmax = f.at_origin();
        let o = g.origin_index();
        let mut worst = [0.0f64; 3];
        for off in [0usize, 3, 17, 60, 400, 2000, 12000] {
            let i = o + off;
            let x = g.coord(i);
            let ex = if x > 20.0 { common::far_series_1d(a, t, x) } else { common::fourier_1d(a, t, x) };
            worst[0] = worst[0].max((f.p[i] - ex[0]).abs() / pmax);
            worst[1] = worst[1].max((f.dp[i] - ex[1]).abs() / pmax);
            worst[2] = worst[2].max((f.d2p[i] - ex[2]).abs() / pmax);
        }
        eprintln!("a={a} L={:.1} {worst:?}", g.half_extent);
        assert!(worst.iter().all(|&w| w < 1e-6), "{worst:?}");
    }
}

#[test]
fn planar_isotropic_matches_hankel_transform() {
    let a = 0.7;
    let m = StableModel::isotropic(a, 2).unwrap();
    let g = admissible_grid(&m, 1.0, 1024, 1e-13).unwrap();
    let f = density_fft(&m, 1.0, &g).unwrap();
    let n = g.points_per_axis;
    let o = g.origin_index();
    let pmax = f.at_origin();
    let mut worst = [0.0f64; 3];
    for (di, dj) in [(1usize, 0usize), (5, 2), (20, 7), (60, 33), (300, 280)] {
        let idx = (o + di) * n + o + dj;
        let x = g.point(idx);
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let [p, pr, prr] = common::hankel_2d(a, 1.0, r);
        let u = [x[0] / r, x[1] / r];
        worst[0] = worst[0].max((f.p[idx] - p).abs() / pmax);
        let gr = f.grad(idx);
        worst[1] = worst[1].max(((gr[0] - pr * u[0]).powi(2) + (gr[1] - pr * u[1]).powi(2)).sqrt() / pmax);
        let h = f.hess(idx);
        for aa in 0..2 {
            for bb in 0..2 {
                let delta = if aa == bb { 1.0 } else { 0.0 };
                let ex = prr * u[aa] * u[bb] + pr / r * (delta - u[aa] * u[bb]);
                worst[2] = worst[2].max((h[aa][bb] - ex).abs() / pmax);
            }
        }
    }
    let ex0 = common::hankel_2d(a, 1.0, 1e-14)[0];
    eprintln!("L={:.2} origin {:.3e} worst {worst:?}", g.half_extent, (pmax - ex0).abs() / ex0);
    assert!((pmax - ex0).abs() < 1e-5 * ex0);
    assert!(worst.iter().all(|&w| w < 1e-5), "{worst:?}");
}

#[test]
fn planar_smooth_matches_polar_quadrature() {
    let m = StableModel::reference_smooth(0.7, 2).unwrap();
    let g = admissible_grid(&m, 1.0, 1024, 1e-13).unwrap();
    let f = density_fft(&m, 1.0, &g).unwrap();
    let n = g.points_per_axis;
    let o = g.origin_index();
    let pmax = f.p.iter().cloned().fold(0.0, f64::max);
    let mut worst = [0.0f64; 2];
    for (di, dj) in [(0usize, 0usize), (4, 9), (30, 2), (160, 122)] {
        let idx = (o + di) * n + o + dj;
        let ex = common::polar_2d(&m, 1.0, g.point(idx), 256);
        let gr = f.grad(idx);
        worst[0] = worst[0].max((f.p[idx] - ex[0]).abs() / pmax);
        worst[1] = worst[1].max((gr[0] - ex[1]).abs().max((gr[1] - ex[2]).abs()) / pmax);
    }
    eprintln!("smooth worst {worst:?}");
    assert!(worst.iter().all(|&w| w < 1e-5), "{worst:?}");
}

#[test]
fn cylindrical_is_a_product_of_one_dim_kernels() {
    let a = 0.7;
    let m = StableModel::cylindrical(a, vec![1.0, 2.0]).unwrap();
    let g = admissible_grid(&m, 1.0, 1024, 1e-13).unwrap();
    let f = density_fft(&m, 1.0, &g).unwrap();
    let n = g.points_per_axis;
    let o = g.origin_index();
    let pmax = f.at_origin();
    let mut worst = 0.0f64;
    for (di, dj) in [(0usize, 0usize), (3, 50), (100, 7), (400, 400)] {
        let idx = (o + di) * n + o + dj;
        let x = g.point(idx);
        let q1 = common::fourier_1d(a, 1.0, x[0]);
        let q2 = common::fourier_1d(a, 2.0, x[1]);
        worst = worst.max((f.p[idx] - q1[0] * q2[0]).abs() / pmax);
        let gr = f.grad(idx);
        worst = worst.max((gr[0] - q1[1] * q2[0]).abs() / pmax);
        worst = worst.max((gr[1] - q1[0] * q2[1]).abs() / pmax);
        worst = worst.max((f.hess(idx)[0][1] - q1[1] * q2[1]).abs() / pmax);
    }
    eprintln!("cyl worst {worst:e}");
    assert!(worst < 1e-5);
}
