//! Running one experiment: numerical work, artifacts and the manifest.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::plots::{bar_chart, line_plot};
use crate::error::{LabError, Result};
use crate::flow::{mollify, random_pairs, trajectory, DriftField};
use crate::grid::GridSpec;
use crate::holder::{frac_op_holder_check, schauder_ratio, smoothed_sine_family, FracOperator};
use crate::integrability::{
    cylindrical_divergence, envelope_spread, kolokoltsov_check, pbeta_admissible, pbeta_report, Envelopes, DIVERGENCE_GROWTH,
};
use crate::kernel::{density_fft, histogram_l1, kernel_field, sample_stable, write_density, write_radial_csv, DensityField};
use crate::proxy::{
    duhamel_proxy, residual_check, smoothing_grid, smoothing_probe, solve_full, viscosity_extrapolate, DriftTerm, FreezingPair,
    FrozenPath, FullOptions, GradedMesh, Profile, ViscosityOptions,
};
use crate::spectral_models::StableModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    /// The quantity is certified infinite, as predicted.
    Divergent,
}

impl Verdict {
    fn of(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The property the verdict certifies.
    pub invariant: String,
    pub verdict: Verdict,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: ExperimentKind,
    pub name: String,
    pub config_hash: String,
    pub tool_version: String,
    pub seed: u64,
    pub wall_time_seconds: f64,
    pub checks: Vec<Check>,
    /// Files written into the output directory, manifest included.
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn any_fail(&self) -> bool {
        self.checks.iter().any(|c| c.verdict == Verdict::Fail)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| LabError::Format(format!("{}: {e}", path.display())))
    }
}

/// Exclusive lock on the output directory for the duration of a run.
struct OutputLock(PathBuf);

impl OutputLock {
    fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let p = dir.join(".lock");
        match OpenOptions::new().write(true).create_new(true).open(&p) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(OutputLock(p))
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(LabError::Locked(dir.display().to_string())),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    dir: &'a Path,
    checks: Vec<Check>,
    artifacts: Vec<String>,
}

impl Ctx<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.to_string());
        self.dir.join(name)
    }

    fn check(&mut self, name: &str, invariant: &str, verdict: Verdict, metrics: &[(&str, f64)]) {
        self.checks.push(Check {
            name: name.into(),
            invariant: invariant.into(),
            verdict,
            metrics: metrics.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        });
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| LabError::Format(e.to_string()))?;
        fs::write(p, text + "\n")?;
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
        let p = self.path(name);
        let mut w = BufWriter::new(File::create(p)?);
        writeln!(w, "{header}")?;
        for r in rows {
            let line: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()?;
        Ok(())
    }

    fn model(&self) -> Result<StableModel> {
        self.cfg.model.as_ref().expect("validated").build()
    }

    fn drift(&self) -> Result<DriftField> {
        self.cfg.drift.as_ref().expect("validated").build()
    }

    fn grid(&self, dim: usize, default_half: f64) -> Result<GridSpec> {
        self.cfg.grid.as_ref().expect("validated").spec(dim, default_half)
    }
}

/// Run `cfg`, writing artifacts and `manifest.json` into `dir`.
pub fn run(cfg: &ExperimentConfig, dir: &Path) -> Result<RunManifest> {
    cfg.validate()?;
    let _lock = OutputLock::acquire(dir)?;
    let start = Instant::now();
    let mut ctx = Ctx { cfg, dir, checks: Vec::new(), artifacts: Vec::new() };
    let outcome = match cfg.kind {
        ExperimentKind::Kernel => run_kernel(&mut ctx),
        ExperimentKind::Pbeta => run_pbeta(&mut ctx),
        ExperimentKind::Kolokoltsov => run_kolokoltsov(&mut ctx),
        ExperimentKind::Flow => run_flow(&mut ctx),
        ExperimentKind::Proxy => run_proxy(&mut ctx),
        ExperimentKind::Solve => run_solve(&mut ctx),
        ExperimentKind::Schauder => run_schauder(&mut ctx),
        ExperimentKind::Fracop => run_fracop(&mut ctx),
    };
    outcome.map_err(|e| match e {
        e @ LabError::Config { .. } => e,
        e => LabError::Scenario { scenario: cfg.label(), source: Box::new(e) },
    })?;
    ctx.artifacts.push("manifest.json".into());
    let manifest = RunManifest {
        kind: cfg.kind,
        name: cfg.label(),
        config_hash: cfg.hash(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        checks: ctx.checks,
        artifacts: ctx.artifacts,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| LabError::Format(e.to_string()))?;
    fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(manifest)
}

fn tag(t: f64) -> String {
    format!("{t}").replace('.', "p")
}

/// CDF of a one-dimensional kernel from cumulative trapezoids, half the tail estimate on each side.
fn cdf_1d(f: &DensityField) -> impl Fn(f64) -> f64 + '_ {
    let g = f.grid;
    let h = g.spacing();
    let half_tail = 0.5 * f.tail_mass_estimate;
    let mut nodal = Vec::with_capacity(f.p.len());
    let mut acc = half_tail;
    for i in 0..f.p.len() {
        acc += if i == 0 { 0.0 } else { 0.5 * h * (f.p[i - 1] + f.p[i]) };
        nodal.push(acc);
    }
    move |x: f64| {
        let u = (x - g.coord(0)) / h;
        if u <= 0.0 {
            return half_tail;
        }
        let k = u.floor() as usize;
        if k + 1 >= nodal.len() {
            return 1.0 - half_tail;
        }
        let r = u - k as f64;
        nodal[k] + r * (nodal[k + 1] - nodal[k])
    }
}

fn run_kernel(ctx: &mut Ctx) -> Result<()> {
    let model = ctx.model()?;
    let times = ctx.cfg.time.as_ref().unwrap().times()?;
    let grid_block = ctx.cfg.grid.clone().unwrap();
    let mut profiles = Vec::new();
    let mut last = None;
    for &t in &times {
        let field = match grid_block.half_extent {
            Some(l) if model.is_stable_kind() => density_fft(&model, t, &GridSpec::new(model.dim, l, grid_block.points)?)?,
            _ => kernel_field(&model, t, grid_block.points)?,
        };
        let p = ctx.path(&format!("kernel_t{}.sipk", tag(t)));
        write_density(&field, &p)?;
        let p = ctx.path(&format!("radial_t{}.csv", tag(t)));
        write_radial_csv(&field, &p)?;
        let mass = field.total_mass();
        ctx.check(
            &format!("normalization_t{}", tag(t)),
            "kernel integrates to one",
            Verdict::of((mass - 1.0).abs() <= 1e-3),
            &[("mass", mass), ("tail_estimate", field.tail_mass_estimate), ("grid_half_extent", field.grid.half_extent)],
        );
        let g = &field.grid;
        let o = g.origin_index();
        let n = g.points_per_axis;
        let pts: Vec<(f64, f64)> = (o..n)
            .map(|i| (g.coord(i), field.p[if g.dim == 1 { i } else { i * n + o }]))
            .filter(|(r, _)| *r <= 10.0 * t.powf(1.0 / model.alpha))
            .collect();
        profiles.push((format!("t = {t}"), pts));
        last = Some(field);
    }
    let p = ctx.path("density_profiles.svg");
    line_plot(&p, "heat kernel along the first axis", "r", "p(t, r)", &profiles, false)?;
    let samples = ctx.cfg.params.samples.unwrap_or(0);
    if samples > 0 {
        let field = last.unwrap();
        if model.dim != 1 {
            return Err(LabError::Config { path: "params.samples".into(), message: "Monte-Carlo check is one-dimensional".into() });
        }
        let xs = sample_stable(&model, field.t, samples, ctx.cfg.seed)?.coordinate(0);
        let cdf = cdf_1d(&field);
        let l1 = histogram_l1(&xs, -10.0, 10.0, 0.1, |a, b| cdf(b) - cdf(a));
        ctx.check("monte_carlo_l1", "sample histogram matches the density", Verdict::of(l1 <= 0.02), &[("l1", l1), ("samples", samples as f64)]);
    }
    Ok(())
}

fn run_pbeta(ctx: &mut Ctx) -> Result<()> {
    let model = ctx.model()?;
    let beta = ctx.cfg.params.beta.ok_or_else(|| LabError::Config { path: "params.beta".into(), message: "missing".into() })?;
    let times = ctx.cfg.time.as_ref().unwrap().times()?;
    let points = ctx.cfg.grid.as_ref().unwrap().points;
    match pbeta_admissible(&model, beta) {
        Err(LabError::Divergent(msg)) => {
            let extents = ctx.cfg.params.extents.clone().unwrap_or(vec![10.0, 100.0, 1000.0, 10000.0]);
            let rep = cylindrical_divergence(&model, beta, 1, 1.0, &extents)?;
            ctx.json("divergence.json", &rep)?;
            let min_growth = rep.growth.iter().cloned().fold(f64::INFINITY, f64::min);
            ctx.check(
                "pbeta_moment",
                &format!("moment integral is infinite ({msg})"),
                if rep.divergent { Verdict::Divergent } else { Verdict::Fail },
                &[("min_growth_per_decade", min_growth), ("required_growth", DIVERGENCE_GROWTH)],
            );
            Ok(())
        }
        Err(e) => Err(e),
        Ok(()) => {
            let rep = pbeta_report(&model, beta, &times, points)?;
            let p = ctx.path("moments_k1.csv");
            rep.first.write_csv(&p)?;
            let p = ctx.path("moments_k2.csv");
            rep.second.write_csv(&p)?;
            ctx.json("pbeta.json", &rep.verdict_json())?;
            let series = [&rep.first, &rep.second]
                .iter()
                .map(|pr| {
                    let pts = pr.t_values.iter().zip(&pr.integrals).map(|(t, v)| (t.ln(), v.ln())).collect();
                    (format!("k = {} (slope {:.3}, theory {:.3})", pr.derivative_order, pr.fitted_slope, pr.theoretical_slope), pts)
                })
                .collect::<Vec<_>>();
            let p = ctx.path("pbeta_slopes.svg");
            line_plot(&p, "log moment against log t", "ln t", "ln I_k(t)", &series, true)?;
            for pr in [&rep.first, &rep.second] {
                ctx.check(
                    &format!("slope_k{}", pr.derivative_order),
                    "moment exponent equals (beta - k)/alpha",
                    Verdict::of(pr.passes(crate::integrability::SLOPE_TOL)),
                    &[("fitted", pr.fitted_slope), ("theory", pr.theoretical_slope)],
                );
            }
            Ok(())
        }
    }
}

fn run_kolokoltsov(ctx: &mut Ctx) -> Result<()> {
    let model = ctx.model()?;
    let times = ctx.cfg.time.as_ref().unwrap().times()?;
    let points = ctx.cfg.grid.as_ref().unwrap().points;
    let k = ctx.cfg.params.threshold.unwrap_or(1.0);
    let env: Vec<Envelopes> = times.iter().map(|&t| kolokoltsov_check(&kernel_field(&model, t, points)?, k)).collect::<Result<_>>()?;
    let t_last = *times.last().unwrap();
    let fine = kolokoltsov_check(&kernel_field(&model, t_last, 2 * points)?, k)?;
    ctx.json("envelopes.json", &serde_json::json!({ "times": env, "refined": fine }))?;
    let names = ["gradient", "hessian_inner", "hessian_outer"];
    let series: Vec<(String, Vec<(f64, f64)>)> =
        (0..3).map(|j| (names[j].to_string(), env.iter().map(|e| (e.t, e.as_array()[j])).collect())).collect();
    let p = ctx.path("envelopes.svg");
    line_plot(&p, "envelope constants", "t", "constant", &series, true)?;
    let spread = envelope_spread(&env);
    let worst_spread = spread.iter().cloned().fold(0.0, f64::max);
    let finite = env.iter().all(|e| e.finite()) && fine.finite();
    ctx.check(
        "time_stability",
        "envelope constants do not depend on t",
        Verdict::of(finite && worst_spread <= 0.2),
        &[("spread_gradient", spread[0]), ("spread_hessian_inner", spread[1]), ("spread_hessian_outer", spread[2])],
    );
    let coarse = env.last().unwrap().as_array();
    let delta = coarse.iter().zip(fine.as_array()).map(|(a, b)| (a / b - 1.0).abs()).fold(0.0, f64::max);
    ctx.check("grid_stability", "envelope constants converge under refinement", Verdict::of(finite && delta <= 0.05), &[("max_relative_change", delta)]);
    Ok(())
}

fn run_flow(ctx: &mut Ctx) -> Result<()> {
    let f = ctx.drift()?;
    let prm = &ctx.cfg.params;
    let alpha = match prm.alpha {
        Some(a) => a,
        None => ctx.model()?.alpha,
    };
    let horizon = ctx.cfg.time.as_ref().unwrap().horizon.unwrap_or(1.0);
    let (n, spread, step) = (prm.pairs.unwrap_or(500), prm.spread.unwrap_or(2.0), prm.step.unwrap_or(2e-3));
    let pairs = random_pairs(n, f.dim, horizon, spread, f.locality_radius, ctx.cfg.seed);
    let rep = crate::flow::flow_stability_check(&f, alpha, &pairs, step)?;
    ctx.csv("ratios.csv", "t,s,x,y,ratio", pairs.iter().zip(&rep.ratios).map(|(p, r)| vec![p.t, p.s, p.x[0], p.y[0], *r]))?;
    ctx.check(
        "stability_ratio",
        "flow ratio bounded and step-stable",
        Verdict::of(rep.stable),
        &[("max_ratio", rep.max_ratio), ("max_ratio_halved", rep.max_ratio_halved), ("relative_change", rep.relative_change)],
    );
    let mut series = Vec::new();
    for (i, p) in pairs.iter().take(5).enumerate() {
        let tr = trajectory(&f, 0.0, p.x, horizon, step)?;
        let path = ctx.path(&format!("trajectory_{i}.csv"));
        tr.write_csv(&path)?;
        series.push((format!("x0 = {:.2}", p.x[0]), tr.times.iter().zip(&tr.points).map(|(t, q)| (*t, q[0])).collect()));
    }
    let p = ctx.path("trajectories.svg");
    line_plot(&p, "flow trajectories", "s", "first coordinate", &series, false)?;
    if !f.smooth {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed ^ 0x6d6f6c6c);
        let mut worst: f64 = 0.0;
        for delta in [0.2, 0.1, 0.05, 0.01] {
            if delta >= f.locality_radius {
                continue;
            }
            let fd = mollify(&f, delta)?;
            for _ in 0..200 {
                let mut x = [0.0; 2];
                for c in x.iter_mut().take(f.dim) {
                    *c = rng.random_range(-spread..spread);
                }
                let t = horizon * rng.random::<f64>();
                let (a, b) = (fd.eval(t, x), f.eval(t, x));
                let err = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                worst = worst.max(err / (f.k0 * delta.powf(f.beta)));
            }
        }
        ctx.check("mollification_bound", "|F_delta - F| <= K0 delta^beta", Verdict::of(worst <= 1.0), &[("worst_normalized_error", worst)]);
    }
    Ok(())
}

fn default_gaps() -> Vec<f64> {
    (3..=8).rev().map(|k| 2f64.powi(-k)).collect()
}

fn run_proxy(ctx: &mut Ctx) -> Result<()> {
    let model = ctx.model()?;
    let f = ctx.drift()?;
    let prm = ctx.cfg.params.clone();
    let beta = prm.beta.unwrap_or(f.beta);
    let gaps = prm.gaps.clone().unwrap_or_else(default_gaps);
    // |sin|^β is π-periodic; the probe picks its own grid on [-π, π)
    let grid = smoothing_grid(&model, PI, gaps[0], 1 << 22)?;
    let pair = FreezingPair::new(0.0, &[prm.xi.unwrap_or(0.0), 0.0][..model.dim]);
    let phi = Profile::AbsSinPower { power: beta, frequency: 1.0 };
    let step = prm.step.unwrap_or(1e-3);
    let rep = smoothing_probe(&model, &f, pair, beta, &gaps, &phi, &grid, step)?;
    ctx.csv("smoothing.csv", "gap,sup_grad,sup_hess", (0..gaps.len()).map(|i| vec![gaps[i], rep.sup_first[i], rep.sup_second[i]]))?;
    let series = vec![
        ("first derivative".to_string(), gaps.iter().zip(&rep.sup_first).map(|(g, v)| (g.ln(), v.ln())).collect()),
        ("second derivative".to_string(), gaps.iter().zip(&rep.sup_second).map(|(g, v)| (g.ln(), v.ln())).collect()),
    ];
    let p = ctx.path("smoothing.svg");
    line_plot(&p, "frozen semigroup smoothing", "ln(s - t)", "ln sup |D^l P phi|", &series, true)?;
    ctx.check("smoothing_first", "slope (beta - 1)/alpha within 0.05", Verdict::of(rep.pass_first), &[("fitted", rep.slope_first), ("theory", rep.theory_first)]);
    ctx.check("smoothing_second", "slope (beta - 2)/alpha within 0.07", Verdict::of(rep.pass_second), &[("fitted", rep.slope_second), ("theory", rep.theory_second)]);
    if let (Some(data), Some(horizon)) = (ctx.cfg.data.clone(), ctx.cfg.time.as_ref().unwrap().horizon) {
        let grid = ctx.grid(model.dim, 4.0 * PI)?;
        let slices = prm.slices.unwrap_or(17);
        let times: Vec<f64> = (0..slices).map(|i| horizon * i as f64 / (slices - 1) as f64).collect();
        let mesh = GradedMesh::for_exponents(model.alpha, f.beta, prm.mesh_nodes.unwrap_or(32))?;
        let u = duhamel_proxy(&model, &f, pair, &data.f, &data.g, &grid, &times, &mesh, 2e-3)?;
        let path = FrozenPath::new(&f, pair, 0.0, horizon, 2e-3)?;
        let res = residual_check(&u, &model, DriftTerm::Frozen(&path), 0.0, &data.f, &data.g)?;
        ctx.json("duhamel_residual.json", &res)?;
        ctx.check("duhamel_residual", "Duhamel formula solves the frozen equation", Verdict::of(res.sup <= 5e-3), &[("sup", res.sup), ("l2", res.l2)]);
    }
    Ok(())
}

fn full_options(ctx: &Ctx) -> FullOptions {
    let prm = &ctx.cfg.params;
    let d = FullOptions::default();
    FullOptions {
        slices: prm.slices.unwrap_or(d.slices),
        mesh_nodes: prm.mesh_nodes.unwrap_or(d.mesh_nodes),
        flow_step: prm.step.unwrap_or(d.flow_step),
        ..d
    }
}

fn run_solve(ctx: &mut Ctx) -> Result<()> {
    let model = ctx.model()?;
    let f = ctx.drift()?;
    let data = ctx.cfg.data.clone().unwrap();
    let horizon = ctx.cfg.time.as_ref().unwrap().horizon()?;
    let grid = ctx.grid(model.dim, 4.0 * PI)?;
    let tol = ctx.cfg.params.tol.unwrap_or(1e-6);
    let eps = ctx.cfg.params.eps.clone().unwrap_or(vec![0.04, 0.02, 0.01]);
    let vopts = ViscosityOptions { time_step: ctx.cfg.params.time_step.unwrap_or(1e-3), ..ViscosityOptions::default() };
    let full = solve_full(&model, &f, &data.f, &data.g, &grid, horizon, tol, &full_options(ctx))?;
    let ex = viscosity_extrapolate(&model, &f, &data.f, &data.g, &grid, horizon, &eps, &vopts)?;
    let gap = full.field.sup_gap(&ex.field)?;
    let res = residual_check(&full.field, &model, DriftTerm::Field(&f), 0.0, &data.f, &data.g)?;
    ctx.json("intervals.json", &full.intervals)?;
    ctx.json("viscosity.json", &ex)?;
    let mut rows = Vec::new();
    for (k, t) in full.field.times.iter().enumerate() {
        let j = ex.field.times.iter().position(|s| (s - t).abs() < 1e-9);
        for i in 0..grid.len() {
            let v = j.map(|j| ex.field.values[j][i]).unwrap_or(f64::NAN);
            rows.push(vec![*t, grid.coord(i), full.field.values[k][i], v]);
        }
    }
    ctx.csv("solution.csv", "t,x,u_full,u_viscosity", rows)?;
    let m = full.field.slices();
    let series: Vec<(String, Vec<(f64, f64)>)> = [0, m / 2, m - 1]
        .iter()
        .map(|&k| (format!("t = {:.4}", full.field.times[k]), (0..grid.len()).map(|i| (grid.coord(i), full.field.values[k][i])).collect()))
        .collect();
    let p = ctx.path("solution.svg");
    line_plot(&p, "solution snapshots", "x", "u(t, x)", &series, false)?;
    ctx.check("viscosity_gap", "fixed point agrees with the vanishing-viscosity limit", Verdict::of(gap <= 1e-2), &[("sup_gap", gap), ("eps_last_gap", ex.last_gap)]);
    ctx.check("integral_identity", "solution satisfies the integral identity", Verdict::of(res.sup <= 5e-3), &[("sup", res.sup), ("l2", res.l2)]);
    ctx.check(
        "fixed_point",
        "Picard iteration converges on every interval",
        Verdict::of(full.intervals.iter().all(|r| r.converged)),
        &[("intervals", full.intervals.len() as f64), ("iterations", full.intervals.iter().map(|r| r.iterations).sum::<usize>() as f64)],
    );
    Ok(())
}

fn run_schauder(ctx: &mut Ctx) -> Result<()> {
    let model = ctx.model()?;
    let base = ctx.cfg.drift.clone().unwrap();
    let data = ctx.cfg.data.clone().unwrap();
    let horizon = ctx.cfg.time.as_ref().unwrap().horizon()?;
    let grid = ctx.grid(model.dim, 4.0 * PI)?;
    let tol = ctx.cfg.params.tol.unwrap_or(1e-6);
    let offsets = ctx.cfg.params.offsets.clone().unwrap_or(vec![0.0, 10.0, 100.0]);
    let amp = base.amplitude.unwrap_or(1.0);
    let opts = full_options(ctx);
    let mut labels = Vec::new();
    let mut ratios = Vec::new();
    let mut reports = Vec::new();
    let mut interior = Vec::new();
    for &c in &offsets {
        let f = DriftField::shifted_sin(model.dim, c, amp, base.beta)?;
        let sol = solve_full(&model, &f, &data.f, &data.g, &grid, horizon, tol, &opts)?;
        let rep = schauder_ratio(&sol.field, &data.f, &data.g, model.alpha, base.beta)?;
        // the terminal slice is g itself; the ratio without it shows how the drift enters
        let mut inner = sol.field.clone();
        inner.times.pop();
        inner.values.pop();
        inner.grads.pop();
        interior.push(schauder_ratio(&inner, &data.f, &data.g, model.alpha, base.beta)?.ratio);
        labels.push(format!("c = {c}"));
        ratios.push(rep.ratio);
        reports.push(serde_json::json!({ "offset": c, "report": rep }));
    }
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
    let variation = hi / lo - 1.0;
    let (ilo, ihi) = interior.iter().fold((f64::MAX, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
    ctx.check(
        "offset_independence",
        "Schauder ratio does not depend on the sup norm of the drift",
        Verdict::of(variation <= 0.2),
        &[("variation", variation), ("min_ratio", lo), ("max_ratio", hi), ("interior_variation", ihi / ilo - 1.0)],
    );
    let a = ctx.cfg.params.ou.unwrap_or(-1.0);
    let ou = DriftField::linear(&[a], 1, base.beta)?;
    let sol = solve_full(&model, &ou, &data.f, &data.g, &grid, horizon, tol, &opts)?;
    let rep = schauder_ratio(&sol.field, &data.f, &data.g, model.alpha, base.beta)?;
    ctx.check("ou_finite", "linear drift gives a finite ratio", Verdict::of(rep.ratio.is_finite() && rep.ratio > 0.0), &[("ratio", rep.ratio)]);
    labels.push(format!("OU a = {a}"));
    ratios.push(rep.ratio);
    reports.push(serde_json::json!({ "ou": a, "report": rep }));
    ctx.json("schauder.json", &reports)?;
    let p = ctx.path("schauder_ratios.svg");
    bar_chart(&p, "empirical Schauder ratios", &labels, &ratios)?;
    Ok(())
}

fn run_fracop(ctx: &mut Ctx) -> Result<()> {
    let pairs = ctx.cfg.params.theta_gamma.clone().unwrap_or(vec![[0.7, 0.5], [1.0, 0.3]]);
    let count = ctx.cfg.params.family.unwrap_or(10);
    let model = match &ctx.cfg.model {
        Some(m) => Some(m.build()?),
        None => None,
    };
    let grid = ctx.grid(1, PI)?;
    let mut reports = Vec::new();
    let mut series = Vec::new();
    for [theta, gamma] in pairs {
        let op = match &model {
            Some(m) if (m.alpha - theta).abs() < 1e-12 && m.dim == 1 => FracOperator::Model(m.clone()),
            _ => FracOperator::Theta(theta),
        };
        let rep = frac_op_holder_check(&op, &smoothed_sine_family(theta + gamma, count), gamma, &grid)?;
        ctx.check(
            &format!("fracop_theta{}_gamma{}", tag(theta), tag(gamma)),
            "fractional operator maps C^(gamma+theta) to C^gamma",
            Verdict::of(rep.pass),
            &[("max_ratio", rep.max_ratio), ("max_ratio_refined", rep.max_ratio_refined), ("refinement_delta", rep.refinement_delta)],
        );
        series.push((format!("theta = {theta}, gamma = {gamma}"), rep.ratios.iter().enumerate().map(|(j, r)| (j as f64, *r)).collect()));
        reports.push(rep);
    }
    ctx.json("fracop.json", &reports)?;
    let p = ctx.path("fracop_ratios.svg");
    line_plot(&p, "norm ratios over the test family", "member j", "ratio", &series, true)?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckDiff {
    pub name: String,
    pub verdict_a: Option<Verdict>,
    pub verdict_b: Option<Verdict>,
    /// `b − a` for metrics present in both runs.
    pub metric_deltas: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareReport {
    pub kind: ExperimentKind,
    pub entries: Vec<CheckDiff>,
    /// Some check passed in `a` but not in `b`, or the reverse.
    pub pass_flipped: bool,
}

impl CompareReport {
    /// Entries with a verdict change or a nonzero metric delta.
    pub fn differences(&self) -> Vec<&CheckDiff> {
        self.entries.iter().filter(|e| e.verdict_a != e.verdict_b || e.metric_deltas.values().any(|d| *d != 0.0)).collect()
    }
}

pub fn compare(a: &RunManifest, b: &RunManifest) -> Result<CompareReport> {
    if a.kind != b.kind {
        return Err(LabError::InvalidParameter(format!("cannot compare a {} run with a {} run", a.kind.name(), b.kind.name())));
    }
    let mut names: Vec<&str> = a.checks.iter().chain(&b.checks).map(|c| c.name.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    let mut flipped = false;
    let entries = names
        .into_iter()
        .map(|n| {
            let ca = a.checks.iter().find(|c| c.name == n);
            let cb = b.checks.iter().find(|c| c.name == n);
            let (va, vb) = (ca.map(|c| c.verdict), cb.map(|c| c.verdict));
            if (va == Some(Verdict::Pass)) != (vb == Some(Verdict::Pass)) {
                flipped = true;
            }
            let mut metric_deltas = BTreeMap::new();
            if let (Some(ca), Some(cb)) = (ca, cb) {
                for (k, x) in &ca.metrics {
                    if let Some(y) = cb.metrics.get(k) {
                        metric_deltas.insert(k.clone(), y - x);
                    }
                }
            }
            CheckDiff { name: n.to_string(), verdict_a: va, verdict_b: vb, metric_deltas }
        })
        .collect();
    Ok(CompareReport { kind: a.kind, entries, pass_flipped: flipped })
}
