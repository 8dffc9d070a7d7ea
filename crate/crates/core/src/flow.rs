//! Drift fields with Hölder metadata, mollification, flows of the drift ODE and the frozen shift.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::special::{gauss_legendre_on, simpson_weights};

pub type Point = [f64; 2];

type DriftFn = dyn Fn(f64, Point) -> Point + Send + Sync;

/// The formula behind a drift.
#[derive(Clone)]
pub enum DriftKind {
    Zero,
    Constant(Point),
    /// `x ↦ A x`, row-major.
    Linear([[f64; 2]; 2]),
    /// `K₀ (1 − min(|x − c|, 1))^β` along the first axis: compact support, cusp at the rim.
    HolderBump { k0: f64, beta: f64, center: Point },
    /// `K₀ min(|x − c|, 1)^β` along the first axis: cusp at the center.
    HolderCusp { k0: f64, beta: f64, center: Point },
    /// `c + a sin(x_i)` in every component.
    ShiftedSin { offset: f64, amplitude: f64 },
    Custom(Arc<DriftFn>),
    Mollified { inner: Arc<DriftField>, delta: f64 },
}

impl fmt::Debug for DriftKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriftKind::Zero => write!(f, "Zero"),
            DriftKind::Constant(b) => write!(f, "Constant({b:?})"),
            DriftKind::Linear(a) => write!(f, "Linear({a:?})"),
            DriftKind::HolderBump { k0, beta, center } => write!(f, "HolderBump(k0={k0}, beta={beta}, center={center:?})"),
            DriftKind::HolderCusp { k0, beta, center } => write!(f, "HolderCusp(k0={k0}, beta={beta}, center={center:?})"),
            DriftKind::ShiftedSin { offset, amplitude } => write!(f, "ShiftedSin(c={offset}, a={amplitude})"),
            DriftKind::Custom(_) => write!(f, "Custom"),
            DriftKind::Mollified { inner, delta } => write!(f, "Mollified({:?}, delta={delta})", inner.kind),
        }
    }
}

/// A drift `F(t, x)` with its declared Hölder data.
#[derive(Clone, Debug)]
pub struct DriftField {
    pub kind: DriftKind,
    pub dim: usize,
    pub beta: f64,
    /// Hölder constant over `|x − x'| ≤ locality_radius`.
    pub k0: f64,
    pub locality_radius: f64,
    /// `None` for unbounded drifts.
    pub sup_norm: Option<f64>,
    /// Lipschitz in space, so flows are integrated without mollification.
    pub smooth: bool,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim != 1 && dim != 2 {
        return invalid(format!("drift dimension {dim} not in {{1,2}}"));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return invalid(format!("beta = {beta} must lie in (0, 1)"));
    }
    Ok(())
}

fn norm(v: Point) -> f64 {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}

fn dist(a: Point, b: Point) -> f64 {
    norm([a[0] - b[0], a[1] - b[1]])
}

impl DriftField {
    fn build(kind: DriftKind, dim: usize, beta: f64, k0: f64, sup_norm: Option<f64>, smooth: bool) -> Result<Self> {
        check_dim(dim)?;
        check_beta(beta)?;
        Ok(DriftField { kind, dim, beta, k0, locality_radius: 1.0, sup_norm, smooth })
    }

    pub fn zero(dim: usize, beta: f64) -> Result<Self> {
        Self::build(DriftKind::Zero, dim, beta, 0.0, Some(0.0), true)
    }

    pub fn constant(b: &[f64], beta: f64) -> Result<Self> {
        let dim = b.len();
        check_dim(dim)?;
        let mut v = [0.0; 2];
        v[..dim].copy_from_slice(b);
        Self::build(DriftKind::Constant(v), dim, beta, 0.0, Some(norm(v)), true)
    }

    /// `F(x) = A x` with `A` given row-major (`dim²` entries). `K₀` is the Frobenius norm.
    pub fn linear(a: &[f64], dim: usize, beta: f64) -> Result<Self> {
        if a.len() != dim * dim {
            return invalid(format!("linear drift needs {} matrix entries", dim * dim));
        }
        let mut m = [[0.0; 2]; 2];
        for i in 0..dim {
            for j in 0..dim {
                m[i][j] = a[i * dim + j];
            }
        }
        let k0 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let sup = if k0 == 0.0 { Some(0.0) } else { None };
        Self::build(DriftKind::Linear(m), dim, beta, k0, sup, true)
    }

    pub fn holder_bump(dim: usize, k0: f64, beta: f64, center: &[f64]) -> Result<Self> {
        let c = Self::center(dim, center)?;
        Self::build(DriftKind::HolderBump { k0, beta, center: c }, dim, beta, k0.abs(), Some(k0.abs()), false)
    }

    pub fn holder_cusp(dim: usize, k0: f64, beta: f64, center: &[f64]) -> Result<Self> {
        let c = Self::center(dim, center)?;
        Self::build(DriftKind::HolderCusp { k0, beta, center: c }, dim, beta, k0.abs(), Some(k0.abs()), false)
    }

    pub fn shifted_sin(dim: usize, offset: f64, amplitude: f64, beta: f64) -> Result<Self> {
        let sup = (offset.abs() + amplitude.abs()) * (dim as f64).sqrt();
        Self::build(DriftKind::ShiftedSin { offset, amplitude }, dim, beta, amplitude.abs(), Some(sup), true)
    }

    /// A user-supplied drift; the Hölder data are declared, not checked (see [`DriftField::holder_probe`]).
    pub fn custom(
        dim: usize,
        beta: f64,
        k0: f64,
        sup_norm: Option<f64>,
        smooth: bool,
        f: impl Fn(f64, Point) -> Point + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::build(DriftKind::Custom(Arc::new(f)), dim, beta, k0, sup_norm, smooth)
    }

    pub fn with_locality_radius(mut self, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return invalid("locality radius must be positive");
        }
        self.locality_radius = r;
        Ok(self)
    }

    fn center(dim: usize, c: &[f64]) -> Result<Point> {
        if c.len() != dim {
            return invalid(format!("center needs {dim} components"));
        }
        let mut v = [0.0; 2];
        v[..dim].copy_from_slice(c);
        Ok(v)
    }

    /// True when `F` does not depend on time (every built-in formula).
    pub fn is_autonomous(&self) -> bool {
        match &self.kind {
            DriftKind::Custom(_) => false,
            DriftKind::Mollified { inner, .. } => inner.is_autonomous(),
            _ => true,
        }
    }

    /// `F(t, x)`; components beyond `dim` are zero.
    pub fn eval(&self, t: f64, x: Point) -> Point {
        let d = self.dim;
        let mut out = match &self.kind {
            DriftKind::Zero => [0.0; 2],
            DriftKind::Constant(b) => *b,
            DriftKind::Linear(a) => [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]],
            DriftKind::HolderBump { k0, beta, center } => {
                let r = dist(x, *center).min(1.0);
                [k0 * (1.0 - r).powf(*beta), 0.0]
            }
            DriftKind::HolderCusp { k0, beta, center } => {
                let r = dist(x, *center).min(1.0);
                [k0 * r.powf(*beta), 0.0]
            }
            DriftKind::ShiftedSin { offset, amplitude } => {
                [offset + amplitude * x[0].sin(), offset + amplitude * x[1].sin()]
            }
            DriftKind::Custom(f) => f(t, x),
            DriftKind::Mollified { inner, delta } => {
                let mut acc = [0.0; 2];
                for &(z, w) in mollifier_nodes(d).iter() {
                    let v = inner.eval(t, [x[0] - delta * z[0], x[1] - delta * z[1]]);
                    acc[0] += w * v[0];
                    acc[1] += w * v[1];
                }
                acc
            }
        };
        if d == 1 {
            out[1] = 0.0;
        }
        out
    }

    /// `F(t, x)` with a finiteness check.
    pub fn eval_checked(&self, t: f64, x: Point) -> Result<Point> {
        let v = self.eval(t, x);
        if v.iter().all(|c| c.is_finite()) {
            Ok(v)
        } else {
            Err(LabError::NonFiniteDrift { t, x: x[..self.dim].to_vec() })
        }
    }

    /// Largest sampled `|F(t,x) − F(t,x')| / |x − x'|^β` over `pairs` random pairs with
    /// `|x − x'| ≤ locality_radius` and `x` in `[-spread, spread]^d`.
    pub fn holder_probe(&self, pairs: usize, spread: f64, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..pairs {
            let x = random_point(&mut rng, self.dim, spread);
            let y = offset_point(&mut rng, self.dim, x, self.locality_radius);
            let t = rng.random::<f64>();
            let r = dist(x, y);
            if r == 0.0 {
                continue;
            }
            let a = self.eval(t, x);
            let b = self.eval(t, y);
            worst = worst.max(dist(a, b) / r.powf(self.beta));
        }
        worst
    }

    /// Central-difference estimate of the spatial Jacobian norm (Frobenius) at `(t, x)`.
    pub fn gradient_probe(&self, t: f64, x: Point, step: f64) -> f64 {
        let mut s = 0.0;
        for a in 0..self.dim {
            let mut xp = x;
            let mut xm = x;
            xp[a] += step;
            xm[a] -= step;
            let fp = self.eval(t, xp);
            let fm = self.eval(t, xm);
            for c in 0..self.dim {
                let g = (fp[c] - fm[c]) / (2.0 * step);
                s += g * g;
            }
        }
        s.sqrt()
    }
}

fn bump(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r2)).exp()
    }
}

/// Quadrature of the unit-mass bump `φ(z) ∝ exp(−1/(1−|z|²))` on the unit ball, symmetric under `z ↦ −z`.
fn mollifier_nodes(dim: usize) -> &'static [(Point, f64)] {
    static ONE: std::sync::OnceLock<Vec<(Point, f64)>> = std::sync::OnceLock::new();
    static TWO: std::sync::OnceLock<Vec<(Point, f64)>> = std::sync::OnceLock::new();
    let build = |d: usize| {
        let mut nodes: Vec<(Point, f64)> = Vec::new();
        if d == 1 {
            for (z, w) in gauss_legendre_on(16, 0.0, 1.0) {
                let v = w * bump(z * z);
                nodes.push(([z, 0.0], v));
                nodes.push(([-z, 0.0], v));
            }
        } else {
            let m = 16;
            for (r, w) in gauss_legendre_on(12, 0.0, 1.0) {
                for k in 0..m {
                    let th = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                    nodes.push(([r * th.cos(), r * th.sin()], w * r * bump(r * r)));
                }
            }
        }
        let total: f64 = nodes.iter().map(|n| n.1).sum();
        nodes.iter_mut().for_each(|n| n.1 /= total);
        nodes
    };
    if dim == 1 {
        ONE.get_or_init(|| build(1))
    } else {
        TWO.get_or_init(|| build(2))
    }
}

/// `F_δ = F ⁎ φ_δ` by quadrature over the bump support.
pub fn mollify(f: &DriftField, delta: f64) -> Result<DriftField> {
    if !(delta > 0.0) {
        return invalid(format!("delta = {delta} must be positive"));
    }
    if delta >= f.locality_radius {
        return invalid(format!("delta = {delta} must be below the locality radius {}", f.locality_radius));
    }
    Ok(DriftField {
        kind: DriftKind::Mollified { inner: Arc::new(f.clone()), delta },
        dim: f.dim,
        beta: f.beta,
        k0: f.k0,
        locality_radius: f.locality_radius,
        sup_norm: f.sup_norm,
        smooth: true,
    })
}

/// The drift actually integrated with ODE step `h`: `F` itself when Lipschitz, otherwise `F_δ`
/// with `δ = h^{1/(1−β)}`.
pub fn flow_drift(f: &DriftField, h: f64) -> Result<(DriftField, Option<f64>)> {
    if f.smooth {
        return Ok((f.clone(), None));
    }
    let delta = h.powf(1.0 / (1.0 - f.beta)).min(0.5 * f.locality_radius);
    Ok((mollify(f, delta)?, Some(delta)))
}

/// A solution `s ↦ θ_{s,τ}(ξ)` of the drift ODE on a uniform time grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub tau: f64,
    pub xi: Point,
    pub dim: usize,
    pub times: Vec<f64>,
    pub points: Vec<Point>,
    /// Drift along the trajectory (the ODE right-hand side at each node).
    pub velocity: Vec<Point>,
    pub step: f64,
    pub mollification: Option<f64>,
    /// `|θ_h − θ_{h/2}|` at the final time (zero when not computed).
    pub step_error: f64,
    /// `K₀ δ^β (until − τ)` when the drift was mollified.
    pub mollification_error: f64,
}

impl FlowTrajectory {
    pub fn end(&self) -> Point {
        *self.points.last().unwrap()
    }

    pub fn error_estimate(&self) -> f64 {
        self.step_error + self.mollification_error
    }

    /// `θ_{s,τ}(ξ)` by cubic Hermite interpolation; `ξ` for `s ≤ τ`.
    pub fn at(&self, s: f64) -> Point {
        if s <= self.tau || self.times.len() == 1 {
            return self.xi;
        }
        let n = self.times.len() - 1;
        let u = ((s - self.tau) / self.step).min(n as f64);
        let k = (u.floor() as usize).min(n - 1);
        let r = u - k as f64;
        let h = self.step;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * r) * (1.0 - r) * (1.0 - r),
            r * (1.0 - r) * (1.0 - r),
            r * r * (3.0 - 2.0 * r),
            r * r * (r - 1.0),
        );
        let mut out = [0.0; 2];
        for c in 0..2 {
            out[c] = h00 * self.points[k][c]
                + h10 * h * self.velocity[k][c]
                + h01 * self.points[k + 1][c]
                + h11 * h * self.velocity[k + 1][c];
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        let head: Vec<String> = (0..self.dim).map(|a| format!("theta_{a}")).collect();
        writeln!(w, "s,{}", head.join(","))?;
        for (s, p) in self.times.iter().zip(&self.points) {
            let cols: Vec<String> = p[..self.dim].iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{s},{}", cols.join(","))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Classical RK4 on a uniform grid of `n` steps.
fn rk4(f: &DriftField, tau: f64, xi: Point, until: f64, n: usize) -> Result<(Vec<f64>, Vec<Point>, Vec<Point>)> {
    let h = (until - tau) / n as f64;
    let mut times = Vec::with_capacity(n + 1);
    let mut pts = Vec::with_capacity(n + 1);
    let mut vel = Vec::with_capacity(n + 1);
    let mut x = xi;
    let add = |x: Point, k: Point, c: f64| [x[0] + c * k[0], x[1] + c * k[1]];
    let mut k1 = f.eval_checked(tau, x)?;
    for i in 0..n {
        let t = tau + i as f64 * h;
        times.push(t);
        pts.push(x);
        vel.push(k1);
        let k2 = f.eval_checked(t + 0.5 * h, add(x, k1, 0.5 * h))?;
        let k3 = f.eval_checked(t + 0.5 * h, add(x, k2, 0.5 * h))?;
        let k4 = f.eval_checked(t + h, add(x, k3, h))?;
        for c in 0..2 {
            x[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        k1 = f.eval_checked(t + h, x)?;
    }
    times.push(until);
    pts.push(x);
    vel.push(k1);
    Ok((times, pts, vel))
}

fn steps_for(span: f64, h: f64, even: bool) -> usize {
    let mut n = ((span / h).ceil() as usize).max(1);
    if even && n % 2 == 1 {
        n += 1;
    }
    n
}

fn check_step(tau: f64, until: f64, h: f64) -> Result<()> {
    if !(until >= tau) {
        return invalid(format!("until = {until} precedes tau = {tau}"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return invalid(format!("step {h} must be positive"));
    }
    Ok(())
}

/// Trajectory without the step-halving estimate (the bulk path used by the solvers).
pub fn trajectory(f: &DriftField, tau: f64, xi: Point, until: f64, h: f64) -> Result<FlowTrajectory> {
    check_step(tau, until, h)?;
    let (g, delta) = flow_drift(f, h)?;
    let span = until - tau;
    let n = steps_for(span, h, false);
    let (times, points, velocity) = if span == 0.0 {
        (vec![tau], vec![xi], vec![g.eval_checked(tau, xi)?])
    } else {
        rk4(&g, tau, xi, until, n)?
    };
    Ok(FlowTrajectory {
        tau,
        xi,
        dim: f.dim,
        times,
        points,
        velocity,
        step: if span == 0.0 { h } else { span / n as f64 },
        mollification: delta,
        step_error: 0.0,
        mollification_error: delta.map_or(0.0, |d| f.k0 * d.powf(f.beta) * span),
    })
}

/// `θ_{s,τ}(ξ)` for `s ∈ [τ, until]` by RK4 with step about `h`, with a step-halving error estimate.
pub fn integrate_flow(f: &DriftField, tau: f64, xi: &[f64], until: f64, h: f64) -> Result<FlowTrajectory> {
    if xi.len() != f.dim {
        return invalid(format!("start point needs {} components", f.dim));
    }
    let mut p = [0.0; 2];
    p[..f.dim].copy_from_slice(xi);
    let mut tr = trajectory(f, tau, p, until, h)?;
    if until > tau {
        let fine = trajectory(f, tau, p, until, 0.5 * h)?;
        tr.step_error = dist(tr.end(), fine.end());
    }
    Ok(tr)
}

/// `m_{s,t}^{(τ,ξ)}(x) = x + ∫_t^s F(v, θ_{v,τ}(ξ)) dv`, composite Simpson on the trajectory grid.
pub fn frozen_shift(f: &DriftField, tau: f64, xi: Point, t: f64, s: f64, x: Point, h: f64) -> Result<Point> {
    if !(tau <= t && t <= s) {
        return invalid(format!("need tau <= t <= s, got ({tau}, {t}, {s})"));
    }
    check_step(t, s, h)?;
    let theta_t = trajectory(f, tau, xi, t, h)?.end();
    if s == t {
        return Ok(x);
    }
    let (g, _) = flow_drift(f, h)?;
    let n = steps_for(s - t, h, true);
    let (_, _, vel) = rk4(&g, t, theta_t, s, n)?;
    let w = simpson_weights(n + 1, (s - t) / n as f64);
    let mut out = x;
    for (v, wi) in vel.iter().zip(&w) {
        out[0] += wi * v[0];
        out[1] += wi * v[1];
    }
    Ok(out)
}

/// One pair `(t, s, x, x')` for the stability lemma.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FlowPair {
    pub t: f64,
    pub s: f64,
    pub x: Point,
    pub y: Point,
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize, spread: f64) -> Point {
    let mut p = [0.0; 2];
    for c in p.iter_mut().take(dim) {
        *c = rng.random_range(-spread..spread);
    }
    p
}

fn offset_point(rng: &mut ChaCha8Rng, dim: usize, x: Point, radius: f64) -> Point {
    let r = radius * rng.random::<f64>();
    if dim == 1 {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        [x[0] + sign * r, 0.0]
    } else {
        let th = 2.0 * PI * rng.random::<f64>();
        [x[0] + r * th.cos(), x[1] + r * th.sin()]
    }
}

/// Random pairs with `0 ≤ t ≤ s ≤ horizon`, `x ∈ [-spread, spread]^d`, `|x − x'| ≤ radius`.
pub fn random_pairs(n: usize, dim: usize, horizon: f64, spread: f64, radius: f64, seed: u64) -> Vec<FlowPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let a = horizon * rng.random::<f64>();
            let b = horizon * rng.random::<f64>();
            let x = random_point(&mut rng, dim, spread);
            let y = offset_point(&mut rng, dim, x, radius);
            FlowPair { t: a.min(b), s: a.max(b), x, y }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityReport {
    pub alpha: f64,
    pub beta: f64,
    pub step: f64,
    /// `|θ_{s,t}(x) − θ_{s,t}(x')| / (|x − x'| + (s − t)^{1/α})` per pair, at step `h`.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub max_ratio_halved: f64,
    pub relative_change: f64,
    pub stable: bool,
}

/// Empirical constant of the flow stability bound, at step `h` and `h/2`.
pub fn flow_stability_check(f: &DriftField, alpha: f64, pairs: &[FlowPair], h: f64) -> Result<StabilityReport> {
    if alpha + f.beta <= 1.0 {
        return invalid(format!("alpha + beta = {} must exceed 1", alpha + f.beta));
    }
    for p in pairs {
        if !(0.0 <= p.t && p.t <= p.s && p.s <= 1.0) {
            return invalid(format!("pair times ({}, {}) must satisfy 0 <= t <= s <= 1", p.t, p.s));
        }
        if dist(p.x, p.y) > f.locality_radius {
            return invalid(format!("pair separation {} exceeds the locality radius", dist(p.x, p.y)));
        }
    }
    let ratios_at = |step: f64| -> Result<Vec<f64>> {
        pairs
            .par_iter()
            .map(|p| {
                let a = trajectory(f, p.t, p.x, p.s, step)?.end();
                let b = trajectory(f, p.t, p.y, p.s, step)?.end();
                let den = dist(p.x, p.y) + (p.s - p.t).powf(1.0 / alpha);
                Ok(if den > 0.0 { dist(a, b) / den } else { 0.0 })
            })
            .collect()
    };
    let ratios = ratios_at(h)?;
    let halved = ratios_at(0.5 * h)?;
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let max_ratio_halved = halved.iter().cloned().fold(0.0, f64::max);
    let relative_change = if max_ratio > 0.0 { (max_ratio_halved / max_ratio - 1.0).abs() } else { 0.0 };
    Ok(StabilityReport {
        alpha,
        beta: f.beta,
        step: h,
        ratios,
        max_ratio,
        max_ratio_halved,
        relative_change,
        stable: max_ratio.is_finite() && relative_change <= 0.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_flow_is_exponential() {
        let f = DriftField::linear(&[1.0], 1, 0.5).unwrap();
        let tr = integrate_flow(&f, 0.0, &[1.0], 1.0, 1e-2).unwrap();
        assert!((tr.end()[0] - 1f64.exp()).abs() < 1e-6);
        assert!(tr.step_error < 1e-7);
        assert_eq!(tr.points[0], [1.0, 0.0]);
    }

    #[test]
    fn peano_branch_from_the_cusp() {
        let f = DriftField::holder_cusp(1, 1.0, 0.5, &[0.0]).unwrap();
        let tr = integrate_flow(&f, 0.0, &[0.0], 1.0, 1e-3).unwrap();
        assert!((tr.end()[0] - 0.25).abs() < 1e-3, "{:?}", tr.end());
        assert!(tr.mollification.is_some());
    }

    #[test]
    fn mollifier_preserves_constants_and_linear_maps() {
        let c = DriftField::constant(&[0.3, -1.2], 0.5).unwrap();
        let cm = mollify(&c, 0.2).unwrap();
        let v = cm.eval(0.0, [0.4, 0.1]);
        assert!((v[0] - 0.3).abs() < 1e-14 && (v[1] + 1.2).abs() < 1e-14);
        let l = DriftField::linear(&[1.0, 2.0, -0.5, 0.3], 2, 0.5).unwrap();
        let lm = mollify(&l, 0.3).unwrap();
        let x = [0.7, -1.1];
        let (a, b) = (l.eval(0.0, x), lm.eval(0.0, x));
        assert!((a[0] - b[0]).abs() < 1e-13 && (a[1] - b[1]).abs() < 1e-13);
        assert!(mollify(&l, 1.0).is_err());
    }

    #[test]
    fn trajectory_convention_before_start() {
        let f = DriftField::constant(&[1.0], 0.5).unwrap();
        let tr = integrate_flow(&f, 0.5, &[2.0], 1.0, 0.1).unwrap();
        assert_eq!(tr.at(0.2), [2.0, 0.0]);
        assert!((tr.at(0.75)[0] - 2.25).abs() < 1e-14);
    }
}
