//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use schauder_core::error::LabError;
use schauder_core::flow::{flow_stability_check, mollify, random_pairs, DriftField};
use schauder_core::grid::{interp1_periodic, interp2_periodic, GridSpec};
use schauder_core::holder::{frac_op_holder_check, schauder_ratio, smoothed_sine_family, FracOperator};
use schauder_core::integrability::{
    cylindrical_divergence, envelope_spread, kolokoltsov_check, pbeta_report, time_ladder, Envelopes,
};
use schauder_core::kernel::{
    admissible_grid, density_fft, density_relativistic, histogram_l1, kernel_field, ks_critical, ks_two_sample,
    sample_stable,
};
use schauder_core::proxy::{
    duhamel_proxy, residual_check, smoothing_grid, smoothing_probe, solve_full, viscosity_extrapolate, DriftTerm,
    FreezingPair, FrozenPath, FullOptions, GradedMesh, Profile, ViscosityOptions,
};
use schauder_core::special::{gamma, gauss_legendre_on};
use schauder_core::spectral_models::StableModel;

type Outcome = Result<(bool, String), LabError>;

fn spread(v: &[f64]) -> f64 {
    let (lo, hi) = v.iter().fold((f64::MAX, f64::MIN), |(a, b), x| (a.min(*x), b.max(*x)));
    hi / lo - 1.0
}

fn normalization() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut cases = 0;
    for kind in ["isotropic", "cylindrical", "smooth"] {
        for alpha in [0.6, 0.8] {
            for d in [1usize, 2] {
                let m = match kind {
                    "isotropic" => StableModel::isotropic(alpha, d)?,
                    "cylindrical" => StableModel::cylindrical(alpha, vec![1.0; d])?,
                    _ => StableModel::reference_smooth(alpha, d)?,
                };
                for t in [0.25, 1.0] {
                    // the heavy cylindrical axes need the wider planar grid
                    let n = if d == 1 { 1 << 14 } else { 1024 };
                    let f = kernel_field(&m, t, n)?;
                    worst = worst.max((f.total_mass() - 1.0).abs());
                    cases += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((worst <= 1e-3 && secs <= 30.0, format!("{cases} cases, max |mass - 1| = {worst:.2e} (tol 1e-3), {secs:.1} s (limit 30 s)")))
}

fn self_similarity() -> Outcome {
    let alpha = 0.7;
    let mut worst = 0.0f64;
    for d in [1usize, 2] {
        let m = StableModel::isotropic(alpha, d)?;
        let n = if d == 1 { 1 << 14 } else { 1024 };
        let g1 = admissible_grid(&m, 1.0, n, 1e-12)?;
        let p1 = density_fft(&m, 1.0, &g1)?;
        for t in [0.25, 0.5] {
            let g = admissible_grid(&m, t, n, 1e-12)?;
            let pt = density_fft(&m, t, &g)?;
            let s = t.powf(1.0 / alpha);
            for idx in 0..g.len() {
                let y = g.point(idx);
                if (y[0] * y[0] + y[1] * y[1]).sqrt() > 5.0 * s {
                    continue;
                }
                let z = [y[0] / s, y[1] / s];
                let v = if d == 1 { interp1_periodic(&g1, &p1.p, z[0]) } else { interp2_periodic(&g1, &p1.p, z) };
                worst = worst.max((pt.p[idx] - v / s.powi(d as i32)).abs() / pt.p[idx].abs());
            }
        }
    }
    Ok((worst <= 1e-3, format!("max relative error {worst:.2e} on |y| <= 5 t^(1/alpha) (tol 1e-3)")))
}

fn closed_form_anchor() -> Outcome {
    let alpha = 0.5;
    let f = kernel_field(&StableModel::isotropic(alpha, 1)?, 1.0, 1 << 16)?;
    let exact = gamma(1.0 + 1.0 / alpha) / PI;
    let rel = (f.at_origin() - exact).abs() / exact;
    Ok((rel <= 1e-3, format!("p(1, 0) = {:.8}, 2/pi = {exact:.8}, relative error {rel:.2e} (tol 1e-3)", f.at_origin())))
}

fn pbeta_exponents() -> Outcome {
    let ladder = time_ladder(6);
    let mut ok = true;
    let mut worst = 0.0f64;
    for (alpha, beta) in [(0.6, 0.8), (0.7, 0.5), (0.8, 0.3)] {
        let r = pbeta_report(&StableModel::isotropic(alpha, 1)?, beta, &ladder, 1 << 16)?;
        for p in [&r.first, &r.second] {
            worst = worst.max((p.fitted_slope - p.theoretical_slope).abs());
        }
        ok &= r.pass;
    }
    let cyl = StableModel::cylindrical(0.6, vec![1.0, 1.0])?;
    let below = pbeta_report(&cyl, 0.4, &ladder, 1024)?;
    let cyl_dev = (below.first.fitted_slope - below.first.theoretical_slope)
        .abs()
        .max((below.second.fitted_slope - below.second.theoretical_slope).abs());
    let refused = matches!(pbeta_report(&cyl, 0.6, &ladder, 1024), Err(LabError::Divergent(_)));
    let div = cylindrical_divergence(&cyl, 0.6, 1, 1.0, &[10.0, 100.0, 1000.0, 10000.0])?;
    let min_growth = div.growth.iter().cloned().fold(f64::MAX, f64::min);
    ok &= below.pass && refused && div.divergent && min_growth >= 0.3;
    Ok((
        ok,
        format!(
            "isotropic max slope deviation {worst:.3} (tol 0.05); cylindrical beta<alpha deviation {cyl_dev:.3}; \
             beta=alpha refused as divergent: {refused}, min growth per decade {min_growth:.2} over 3 decades (need 0.30)"
        ),
    ))
}

fn relativistic() -> Outcome {
    let alpha = 0.7;
    let iso = StableModel::isotropic(alpha, 1)?;
    let rel = StableModel::relativistic(alpha, 1, 1.0)?;
    let zero = StableModel::relativistic(alpha, 1, 0.0)?;
    let e = 1f64.exp();
    let mut excess = f64::MIN;
    for t in [1.0 / 64.0, 1.0 / 8.0, 0.5, 1.0] {
        let g = admissible_grid(&iso, t, 1 << 13, 1e-12)?;
        let p = density_relativistic(&rel, t, &g, 2048)?;
        let p0 = density_relativistic(&zero, t, &g, 2048)?;
        excess = excess.max(p.p.iter().zip(&p0.p).map(|(a, b)| a - e * b).fold(f64::MIN, f64::max));
    }
    let ladder: Vec<f64> = (6..=12).rev().map(|j| 2f64.powi(-j)).collect();
    let rep = pbeta_report(&rel, 0.9, &ladder, 1 << 15)?;
    let full = pbeta_report(&rel, 0.9, &time_ladder(6), 1 << 15)?;
    Ok((
        excess <= 1e-4 && rep.pass,
        format!(
            "max(p_m - e^m p_0) = {excess:.2e} (tol 1e-4); slopes on t in 2^-12..2^-6: {:.3}, {:.3} vs {:.3}, {:.3} (tol 0.05); \
             on 2^-6..1 (informational): {:.3}, {:.3}",
            rep.first.fitted_slope,
            rep.second.fitted_slope,
            rep.first.theoretical_slope,
            rep.second.theoretical_slope,
            full.first.fitted_slope,
            full.second.fitted_slope
        ),
    ))
}

fn kolokoltsov() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for d in [1usize, 2] {
        let m = StableModel::isotropic(0.7, d)?;
        let n = if d == 1 { 1 << 14 } else { 512 };
        let env = [0.25, 0.5, 1.0]
            .iter()
            .map(|&t| kolokoltsov_check(&kernel_field(&m, t, n)?, 1.0))
            .collect::<Result<Vec<Envelopes>, _>>()?;
        let across = envelope_spread(&env).iter().cloned().fold(0.0, f64::max);
        let fine = kolokoltsov_check(&kernel_field(&m, 1.0, 2 * n)?, 1.0)?;
        let refine = env[2].as_array().iter().zip(fine.as_array()).map(|(a, b)| (a / b - 1.0).abs()).fold(0.0, f64::max);
        ok &= env.iter().all(|e| e.finite()) && across <= 0.2 && refine <= 0.05;
        detail.push(format!("d={d}: spread across t {across:.3} (tol 0.20), grid change {refine:.4} (tol 0.05)"));
    }
    Ok((ok, detail.join("; ")))
}

fn flow_lemma() -> Outcome {
    let f = DriftField::holder_cusp(1, 1.0, 0.6, &[0.0])?;
    let pairs = random_pairs(500, 1, 1.0, 2.0, 1.0, 11);
    let r = flow_stability_check(&f, 0.6, &pairs, 2e-3)?;
    let mut moll_ok = true;
    let mut worst = 0.0f64;
    for delta in [0.2, 0.1, 0.05, 0.01] {
        let fd = mollify(&f, delta)?;
        let bound = f.k0 * delta.powf(f.beta);
        for i in 0..=4000 {
            let x = [-3.0 + i as f64 * 1.5e-3, 0.0];
            let err = (fd.eval(0.0, x)[0] - f.eval(0.0, x)[0]).abs();
            worst = worst.max(err / bound);
            moll_ok &= err <= bound;
        }
    }
    Ok((
        r.stable && moll_ok,
        format!(
            "max ratio {:.4} (h) / {:.4} (h/2), change {:.2}% (tol 10%); max |F_d - F| / (K0 d^beta) = {worst:.3} (need <= 1)",
            r.max_ratio,
            r.max_ratio_halved,
            100.0 * r.relative_change
        ),
    ))
}

fn smoothing() -> Outcome {
    let m = StableModel::isotropic(0.7, 1)?;
    let f = DriftField::holder_bump(1, 1.0, 0.5, &[0.0])?;
    let gaps: Vec<f64> = (3..=8).rev().map(|k| 2f64.powi(-k)).collect();
    let grid = smoothing_grid(&m, PI, gaps[0], 1 << 22)?;
    let phi = Profile::AbsSinPower { power: 0.5, frequency: 1.0 };
    let r = smoothing_probe(&m, &f, FreezingPair::new(0.0, &[0.3]), 0.5, &gaps, &phi, &grid, 1e-3)?;
    Ok((
        r.pass_first && r.pass_second,
        format!(
            "l=1 slope {:.4} vs {:.4} (tol 0.05); l=2 slope {:.4} vs {:.4} (tol 0.07)",
            r.slope_first, r.theory_first, r.slope_second, r.theory_second
        ),
    ))
}

struct Reference {
    model: StableModel,
    drift: DriftField,
    f: Profile,
    g: Profile,
    grid: GridSpec,
    horizon: f64,
}

fn reference() -> Result<Reference, LabError> {
    Ok(Reference {
        model: StableModel::isotropic(0.7, 1)?,
        drift: DriftField::holder_bump(1, 1.0, 0.5, &[0.0])?,
        f: Profile::Cos { amplitude: 1.0, frequency: 1.0 },
        g: Profile::SmoothBump { amplitude: 1.0, center: 0.0, radius: 1.5 },
        grid: GridSpec::new(1, 4.0 * PI, 256)?,
        horizon: 0.25,
    })
}

fn solver_consistency() -> Outcome {
    let start = Instant::now();
    let r = reference()?;
    let pair = FreezingPair::new(0.0, &[0.3]);
    let times: Vec<f64> = (0..17).map(|i| r.horizon * i as f64 / 16.0).collect();
    let mesh = GradedMesh::for_exponents(0.7, 0.5, 32)?;
    let u = duhamel_proxy(&r.model, &r.drift, pair, &r.f, &r.g, &r.grid, &times, &mesh, 2e-3)?;
    let path = FrozenPath::new(&r.drift, pair, 0.0, r.horizon, 2e-3)?;
    let proxy_res = residual_check(&u, &r.model, DriftTerm::Frozen(&path), 0.0, &r.f, &r.g)?;
    let full = solve_full(&r.model, &r.drift, &r.f, &r.g, &r.grid, r.horizon, 1e-6, &FullOptions::default())?;
    let eps = [0.04, 0.02, 0.01];
    let ex = viscosity_extrapolate(&r.model, &r.drift, &r.f, &r.g, &r.grid, r.horizon, &eps, &ViscosityOptions::default())?;
    let gap = full.field.sup_gap(&ex.field)?;
    let secs = start.elapsed().as_secs_f64();
    Ok((
        proxy_res.sup <= 5e-3 && gap <= 1e-2 && secs <= 300.0,
        format!(
            "proxy residual {:.2e} (tol 5e-3); full vs extrapolated viscosity gap {gap:.2e} (tol 1e-2); {secs:.1} s (limit 300 s)",
            proxy_res.sup
        ),
    ))
}

fn schauder_robustness() -> Outcome {
    let r = reference()?;
    let opts = FullOptions::default();
    let mut ratios = Vec::new();
    let mut interior = Vec::new();
    for c in [0.0, 10.0, 100.0] {
        let f = DriftField::shifted_sin(1, c, 1.0, 0.5)?;
        let sol = solve_full(&r.model, &f, &r.f, &r.g, &r.grid, r.horizon, 1e-6, &opts)?;
        ratios.push(schauder_ratio(&sol.field, &r.f, &r.g, 0.7, 0.5)?.ratio);
        let mut inner = sol.field.clone();
        inner.times.pop();
        inner.values.pop();
        inner.grads.pop();
        interior.push(schauder_ratio(&inner, &r.f, &r.g, 0.7, 0.5)?.ratio);
    }
    let ou = DriftField::linear(&[-1.0], 1, 0.5)?;
    let sol = solve_full(&r.model, &ou, &r.f, &r.g, &r.grid, r.horizon, 1e-6, &opts)?;
    let ou_ratio = schauder_ratio(&sol.field, &r.f, &r.g, 0.7, 0.5)?.ratio;
    let var = spread(&ratios);
    Ok((
        var <= 0.2 && ou_ratio.is_finite() && ou_ratio > 0.0,
        format!(
            "ratios {:.4?} for c = 0, 10, 100, variation {:.2}% (tol 20%); without the terminal slice {:.2}%; OU ratio {ou_ratio:.4}",
            ratios,
            100.0 * var,
            100.0 * spread(&interior)
        ),
    ))
}

fn frac_op() -> Outcome {
    let grid = GridSpec::new(1, PI, 4096)?;
    let mut ok = true;
    let mut detail = Vec::new();
    for (theta, gamma) in [(0.7, 0.5), (1.0, 0.3)] {
        let rep = frac_op_holder_check(&FracOperator::Theta(theta), &smoothed_sine_family(theta + gamma, 10), gamma, &grid)?;
        ok &= rep.pass;
        detail.push(format!(
            "(theta, gamma) = ({theta}, {gamma}): max ratio {:.4}, under halving {:.2e} (tol 0.15)",
            rep.max_ratio, rep.refinement_delta
        ));
    }
    Ok((ok, detail.join("; ")))
}

/// Bin mass of the 1-d density by Gauss–Legendre over a Fourier-quadrature oracle.
fn oracle_mass(alpha: f64, a: f64, b: f64) -> f64 {
    gauss_legendre_on(6, a, b).into_iter().map(|(x, w)| w * common::fourier_1d(alpha, 1.0, x)[0]).sum()
}

fn monte_carlo() -> Outcome {
    let alpha = 0.7;
    let m = StableModel::isotropic(alpha, 1)?;
    let n = 1_000_000;
    let x1 = sample_stable(&m, 1.0, n, 2024)?.coordinate(0);
    let l1 = histogram_l1(&x1, -10.0, 10.0, 0.1, |a, b| oracle_mass(alpha, a, b));
    let t = 0.25;
    let xt = sample_stable(&m, t, n, 2025)?.coordinate(0);
    let scaled: Vec<f64> = x1.iter().map(|v| t.powf(1.0 / alpha) * v).collect();
    let ks = ks_two_sample(&xt, &scaled);
    let crit = ks_critical(n, n, 0.01);
    Ok((
        l1 <= 0.02 && ks <= crit,
        format!("histogram L1 {l1:.4} over 10^6 samples (tol 0.02); scaling KS {ks:.2e} vs 1% critical {crit:.2e}"),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("kernel normalization", normalization),
        ("self-similarity", self_similarity),
        ("closed-form anchor", closed_form_anchor),
        ("moment exponents", pbeta_exponents),
        ("relativistic domination", relativistic),
        ("Kolokoltsov envelopes", kolokoltsov),
        ("flow stability", flow_lemma),
        ("frozen-semigroup smoothing", smoothing),
        ("solver consistency", solver_consistency),
        ("Schauder robustness", schauder_robustness),
        ("fractional-operator Holder bound", frac_op),
        ("Monte-Carlo cross-check", monte_carlo),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(Ok(v)) => v,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".to_string()),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<34} {}  [{:.1} s] {detail}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
