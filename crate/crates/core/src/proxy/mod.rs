//! Frozen (proxy) semigroup, Duhamel representation, cutoff remainder, the full fixed-point solver
//! and the vanishing-viscosity reference solver, all on the periodic grid `[-L, L)^d`.

mod duhamel;
mod full;
mod remainder;
mod residual;
mod semigroup;
mod viscosity;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::flow::{trajectory, DriftField, FlowTrajectory, Point};
use crate::grid::{GridSpec, Spectral};
use crate::spectral_models::StableModel;

pub use duhamel::{duhamel_proxy, GradedMesh};
pub use full::{solve_full, FullOptions, FullSolution, IntervalReport};
pub use remainder::{remainder_eval, Remainder};
pub use residual::{residual_check, DriftTerm, ResidualReport};
pub use semigroup::{frozen_semigroup_apply, smoothing_probe, smoothing_grid, Applied, SmoothingReport, TailRule};
pub use viscosity::{solve_viscosity, viscosity_extrapolate, Extrapolation, ViscosityOptions};

/// Freezing parameters `(τ, ξ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreezingPair {
    pub tau: f64,
    pub xi: Point,
}

impl FreezingPair {
    pub fn new(tau: f64, xi: &[f64]) -> Self {
        let mut p = [0.0; 2];
        p[..xi.len().min(2)].copy_from_slice(&xi[..xi.len().min(2)]);
        FreezingPair { tau, xi: p }
    }
}

/// Closed-form spatial data (sources, terminal values, test functions).
///
/// In two dimensions the one-dimensional formulas act on the first coordinate, except `SmoothBump`,
/// which is radial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Zero,
    Constant { value: f64 },
    Cos { amplitude: f64, frequency: f64 },
    Sin { amplitude: f64, frequency: f64 },
    /// `a exp(1 − 1/(1 − r²))`, `r = |x − c|/radius`, zero for `r ≥ 1`.
    SmoothBump { amplitude: f64, center: f64, radius: f64 },
    /// `|sin(ωx)|^p`.
    AbsSinPower { power: f64, frequency: f64 },
    /// `(sin²(ωx) + δ²)^{p/2}`, a smoothed `|sin|^p`.
    SmoothedAbsSin { power: f64, frequency: f64, delta: f64 },
    Affine { slope: f64, intercept: f64 },
    #[serde(skip)]
    Samples(Arc<Vec<f64>>),
}

fn bump_unit(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

impl Profile {
    pub fn eval(&self, x: Point) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Constant { value } => *value,
            Profile::Cos { amplitude, frequency } => amplitude * (frequency * x[0]).cos(),
            Profile::Sin { amplitude, frequency } => amplitude * (frequency * x[0]).sin(),
            Profile::SmoothBump { amplitude, center, radius } => {
                let r = ((x[0] - center).powi(2) + x[1] * x[1]).sqrt() / radius;
                amplitude * bump_unit(r)
            }
            Profile::AbsSinPower { power, frequency } => (frequency * x[0]).sin().abs().powf(*power),
            Profile::SmoothedAbsSin { power, frequency, delta } => {
                ((frequency * x[0]).sin().powi(2) + delta * delta).powf(0.5 * power)
            }
            Profile::Affine { slope, intercept } => slope * x[0] + intercept,
            Profile::Samples(_) => f64::NAN,
        }
    }

    /// Values on every grid point.
    pub fn sample(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        if let Profile::Samples(v) = self {
            if v.len() != grid.len() {
                return invalid("sampled profile does not match the grid");
            }
            return Ok(v.as_ref().clone());
        }
        Ok((0..grid.len()).map(|i| self.eval(grid.point(i))).collect())
    }
}

/// The cutoff `η(y) = ρ((y − c)/r)` with `ρ(y) = exp(1 − 1/(1 − (2|y| − 1)₊²))` on the unit ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub radius: f64,
    /// Centers are reduced modulo the period (torus); otherwise the support must stay on the grid.
    pub wrap: bool,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        CutoffSpec { radius: 1.0, wrap: true }
    }
}

impl CutoffSpec {
    /// `ρ` at distance `r` from the center in units of the radius.
    pub fn profile(r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        let u = (2.0 * r - 1.0).max(0.0);
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }

    /// `η` on the grid for the given center.
    pub fn on_grid(&self, grid: &GridSpec, center: Point) -> Result<Vec<f64>> {
        let l = grid.half_extent;
        let r = self.radius;
        if !(r > 0.0) || 2.0 * r >= l {
            return Err(LabError::CutoffOutsideGrid(format!("radius {r} does not fit a period of {}", 2.0 * l)));
        }
        if center[..grid.dim].iter().any(|c| !c.is_finite()) {
            return Err(LabError::CutoffOutsideGrid(format!("non-finite center {center:?}")));
        }
        if !self.wrap && center[..grid.dim].iter().any(|c| c.abs() + r > l) {
            return Err(LabError::CutoffOutsideGrid(format!("center {center:?} with radius {r}, half extent {l}")));
        }
        let per = |v: f64| v - 2.0 * l * ((v + l) / (2.0 * l)).floor();
        Ok((0..grid.len())
            .map(|i| {
                let p = grid.point(i);
                let mut s = 0.0;
                for a in 0..grid.dim {
                    let dv = per(p[a] - center[a]);
                    s += dv * dv;
                }
                Self::profile(s.sqrt() / r)
            })
            .collect())
    }
}

/// Solution data on a time grid: values and gradients per slice.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceTimeField {
    pub grid: GridSpec,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// Point-major gradients (`i * d + a`).
    pub grads: Vec<Vec<f64>>,
    /// How gradients were obtained.
    pub gradient_method: String,
}

impl SpaceTimeField {
    pub fn slices(&self) -> usize {
        self.times.len()
    }

    pub fn sup_norms(&self) -> Vec<f64> {
        self.values.iter().map(|v| sup(v)).collect()
    }

    pub fn finite(&self) -> bool {
        self.values.iter().chain(&self.grads).all(|v| v.iter().all(|x| x.is_finite()))
    }

    pub fn terminal(&self) -> &[f64] {
        self.values.last().unwrap()
    }

    /// Largest pointwise difference over common slice times (matched within `1e-9`).
    pub fn sup_gap(&self, other: &SpaceTimeField) -> Result<f64> {
        if self.grid != other.grid {
            return invalid("fields live on different grids");
        }
        let mut gap: f64 = 0.0;
        let mut matched = 0;
        for (i, t) in self.times.iter().enumerate() {
            if let Some(j) = other.times.iter().position(|s| (s - t).abs() < 1e-9) {
                matched += 1;
                for (a, b) in self.values[i].iter().zip(&other.values[j]) {
                    gap = gap.max((a - b).abs());
                }
            }
        }
        if matched == 0 {
            return invalid("no common slice times");
        }
        Ok(gap)
    }

    /// Keep every `stride`-th slice (and the last).
    pub fn thinned(&self, stride: usize) -> SpaceTimeField {
        let m = self.times.len();
        let keep: Vec<usize> = (0..m).filter(|i| i % stride.max(1) == 0 || *i == m - 1).collect();
        SpaceTimeField {
            grid: self.grid,
            times: keep.iter().map(|&i| self.times[i]).collect(),
            values: keep.iter().map(|&i| self.values[i].clone()).collect(),
            grads: keep.iter().map(|&i| self.grads[i].clone()).collect(),
            gradient_method: self.gradient_method.clone(),
        }
    }
}

pub(crate) fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Fourier plumbing on the periodic grid: symbol, frequencies, multipliers and point evaluation.
pub(crate) struct Torus {
    pub grid: GridSpec,
    pub sp: Spectral,
    pub sym: Arc<Vec<f64>>,
    pub lam: Vec<Point>,
}

impl Torus {
    pub fn new(model: &StableModel, grid: &GridSpec) -> Result<Self> {
        if model.dim != grid.dim {
            return Err(LabError::GridRejected("grid and model dimensions differ".into()));
        }
        let sp = Spectral::new(*grid);
        let lam = (0..grid.len()).map(|i| sp.freq_vec(i)).collect();
        Ok(Torus { grid: *grid, sp, sym: model.symbol_on_grid(grid), lam })
    }

    pub fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        self.sp.forward(f)
    }

    pub fn nyquist(&self, idx: usize, axis: usize) -> bool {
        self.sp.is_nyquist(idx, axis)
    }

    /// Largest `exp(dt Ψ)` on the Nyquist lines.
    pub fn nyquist_level(&self, dt: f64) -> f64 {
        (0..self.grid.len())
            .filter(|&i| (0..self.grid.dim).any(|a| self.nyquist(i, a)))
            .map(|i| (dt * self.sym[i]).exp())
            .fold(0.0, f64::max)
    }

    /// Multiplier `exp(dt Ψ(λ) + i⟨λ, b⟩)`.
    pub fn propagator(&self, dt: f64, shift: Point) -> Vec<Complex64> {
        (0..self.grid.len())
            .map(|i| {
                let l = self.lam[i];
                Complex64::from_polar((dt * self.sym[i]).exp(), l[0] * shift[0] + l[1] * shift[1])
            })
            .collect()
    }

    /// Inverse transform of `hat · mult · (iλ_a)` (`axis = None` for no derivative).
    pub fn apply(&self, hat: &[Complex64], mult: &[Complex64], axis: Option<usize>) -> Vec<f64> {
        let d: Vec<Complex64> = hat
            .iter()
            .zip(mult)
            .enumerate()
            .map(|(i, (h, m))| match axis {
                None => h * m,
                Some(a) if self.nyquist(i, a) => Complex64::new(0.0, 0.0),
                Some(a) => h * m * Complex64::new(0.0, self.lam[i][a]),
            })
            .collect();
        self.sp.inverse(d)
    }

    /// Point-major gradient of a grid function.
    pub fn gradient(&self, f: &[f64]) -> Vec<f64> {
        let d = self.grid.dim;
        let hat = self.forward(f);
        let one = vec![Complex64::new(1.0, 0.0); hat.len()];
        let parts: Vec<Vec<f64>> = (0..d).map(|a| self.apply(&hat, &one, Some(a))).collect();
        let mut g = vec![0.0; f.len() * d];
        for (a, p) in parts.iter().enumerate() {
            for (i, v) in p.iter().enumerate() {
                g[i * d + a] = *v;
            }
        }
        g
    }

    /// `L_α f` by the symbol.
    pub fn generator(&self, f: &[f64]) -> Vec<f64> {
        let mut hat = self.forward(f);
        for (h, s) in hat.iter_mut().zip(self.sym.iter()) {
            *h *= *s;
        }
        self.sp.inverse(hat)
    }

    /// Phases `exp(iλ_k (x + L))` along one axis (1-d grids).
    fn phases_1d(&self, x: f64) -> Vec<Complex64> {
        let n = self.grid.points_per_axis;
        let dl = PI / self.grid.half_extent;
        let step = Complex64::from_polar(1.0, dl * (x + self.grid.half_extent));
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        let mut z = Complex64::new(1.0, 0.0);
        for k in 0..=n / 2 {
            out[k] = z;
            if k > 0 && k < n / 2 {
                out[n - k] = z.conj();
            }
            z *= step;
        }
        // Nyquist: treat as the cosine mode
        out
    }

    /// Value and derivative at `x` of the trigonometric interpolant of `hat · exp(dt Ψ)` (1-d).
    pub fn point_eval_1d(&self, hat: &[Complex64], decay: &[f64], x: f64) -> (f64, f64) {
        let n = self.grid.points_per_axis;
        let ph = self.phases_1d(x);
        let mut v = 0.0;
        let mut dv = 0.0;
        for k in 0..n {
            let z = hat[k] * ph[k] * decay[k];
            v += z.re;
            if k != n / 2 {
                dv -= z.im * self.lam[k][0];
            }
        }
        (v / n as f64, dv / n as f64)
    }

    pub fn decay(&self, dt: f64) -> Vec<f64> {
        self.sym.iter().map(|s| (dt * s).exp()).collect()
    }
}

/// `θ_{v,τ}(ξ)` and the frozen drift `b(v) = F(v, θ_{v,τ}(ξ))` for `v ∈ [lo, hi]`, with the
/// cumulative shift `B(v) = ∫ b` so that `m_{s,t}(x) = x + B(s) − B(t)`.
#[derive(Clone, Debug)]
pub struct FrozenPath {
    pub pair: FreezingPair,
    forward: FlowTrajectory,
    /// Drift at `ξ` for `v < τ` on a uniform grid down to `lo` (empty when `lo ≥ τ`).
    before: Vec<(f64, Point, Point)>,
}

impl FrozenPath {
    pub fn new(f: &DriftField, pair: FreezingPair, lo: f64, hi: f64, h: f64) -> Result<Self> {
        let forward = trajectory(f, pair.tau, pair.xi, hi.max(pair.tau), h)?;
        let mut before = Vec::new();
        if lo < pair.tau {
            let (g, _) = crate::flow::flow_drift(f, h)?;
            let n = (((pair.tau - lo) / h).ceil() as usize).max(1);
            let dv = (pair.tau - lo) / n as f64;
            let mut acc = [0.0; 2];
            let mut prev = g.eval_checked(pair.tau, pair.xi)?;
            before.push((pair.tau, acc, prev));
            for k in 1..=n {
                let v = pair.tau - k as f64 * dv;
                let b = g.eval_checked(v, pair.xi)?;
                for c in 0..2 {
                    acc[c] -= 0.5 * dv * (b[c] + prev[c]);
                }
                before.push((v, acc, b));
                prev = b;
            }
        }
        Ok(FrozenPath { pair, forward, before })
    }

    /// `θ_{v,τ}(ξ)`.
    pub fn theta(&self, v: f64) -> Point {
        self.forward.at(v)
    }

    /// `B(v)`, zero at `v = τ`.
    pub fn cumulative(&self, v: f64) -> Point {
        let xi = self.pair.xi;
        if v >= self.pair.tau {
            let p = self.forward.at(v);
            return [p[0] - xi[0], p[1] - xi[1]];
        }
        // linear interpolation on the backward grid
        let k = self.before.iter().position(|e| e.0 <= v).unwrap_or(self.before.len() - 1).max(1);
        let (v1, b1, _) = self.before[k];
        let (v0, b0, _) = self.before[k - 1];
        let w = if v0 == v1 { 0.0 } else { (v - v1) / (v0 - v1) };
        [b1[0] + w * (b0[0] - b1[0]), b1[1] + w * (b0[1] - b1[1])]
    }

    /// `m_{s,t}(x) − x`.
    pub fn shift(&self, t: f64, s: f64) -> Point {
        let (a, b) = (self.cumulative(t), self.cumulative(s));
        [b[0] - a[0], b[1] - a[1]]
    }

    /// Frozen drift `b(v)` (the drift that moves the trajectory).
    pub fn drift(&self, v: f64) -> Point {
        if v >= self.pair.tau {
            let tr = &self.forward;
            if tr.times.len() == 1 {
                return tr.velocity[0];
            }
            let n = tr.times.len() - 1;
            let u = ((v - tr.tau) / tr.step).clamp(0.0, n as f64);
            let k = (u.floor() as usize).min(n - 1);
            let r = u - k as f64;
            let (a, b) = (tr.velocity[k], tr.velocity[k + 1]);
            return [a[0] + r * (b[0] - a[0]), a[1] + r * (b[1] - a[1])];
        }
        let k = self.before.iter().position(|e| e.0 <= v).unwrap_or(self.before.len() - 1);
        self.before[k].2
    }
}
