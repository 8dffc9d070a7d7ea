//! Non-local operators `L_α`: model definitions, symbols, Lévy densities and grid application.

mod levy;
mod lattice;

pub use lattice::{box_exit_radius, image_sum_2d, integrate_outside_box, AngularPower};
pub use levy::{levy_apply, levy_stencil, Extension, LevyPath, LevyStencil};

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::grid::GridSpec;
use crate::special::{cos_power_coeffs, gauss_legendre_on, stable_radial_constant};

/// Which family of operators a [`StableModel`] belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    IsotropicFractional,
    SmoothSpectralDensity,
    Cylindrical,
    Truncated,
    Relativistic,
}

impl ModelKind {
    /// Numeric code used in the binary kernel format.
    pub fn code(self) -> u32 {
        match self {
            ModelKind::IsotropicFractional => 0,
            ModelKind::SmoothSpectralDensity => 1,
            ModelKind::Cylindrical => 2,
            ModelKind::Truncated => 3,
            ModelKind::Relativistic => 4,
        }
    }

    pub fn from_code(c: u32) -> Option<Self> {
        Some(match c {
            0 => ModelKind::IsotropicFractional,
            1 => ModelKind::SmoothSpectralDensity,
            2 => ModelKind::Cylindrical,
            3 => ModelKind::Truncated,
            4 => ModelKind::Relativistic,
            _ => return None,
        })
    }

    pub fn is_symmetric(self) -> bool {
        self != ModelKind::Relativistic
    }
}

/// Spectral measure description.
///
/// `Tabulated` holds samples of an angular density at `θ_j = 2πj/n` on the circle (two values
/// `w(+1), w(-1)` in dimension one); the density enters through its symmetric part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralSpec {
    Uniform,
    Atoms(Vec<f64>),
    Tabulated(Vec<f64>),
}

/// An operator specification. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableModel {
    pub kind: ModelKind,
    pub alpha: f64,
    pub dim: usize,
    pub mass: f64,
    pub trunc_radius: f64,
    pub spectral: SpectralSpec,
    /// Non-degeneracy constant: `η^{-1} ≤ Φ(s) ≤ η` on the unit sphere.
    pub eta: f64,
    /// Cosine/sine coefficients of the symmetric angular density in modes `2k` (d = 2).
    density_modes: Vec<(f64, f64)>,
    /// Coefficients of the directional factor `Φ(θ) = Σ a_k cos 2kθ + b_k sin 2kθ` (d = 2).
    factor_modes: Vec<(f64, f64)>,
    /// Per-axis weights (Cylindrical) or the scalar factor in dimension one.
    axis_weights: Vec<f64>,
}

/// Normalization `1/∫_0^{2π} |cos θ|^α dθ` of the uniform density on the circle.
pub fn circle_normalization(alpha: f64) -> f64 {
    1.0 / (2.0 * PI * cos_power_coeffs(alpha, 0)[0])
}

impl StableModel {
    pub fn new(
        kind: ModelKind,
        alpha: f64,
        dim: usize,
        mass: f64,
        trunc_radius: f64,
        spectral: SpectralSpec,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return invalid(format!("alpha = {alpha} must lie strictly inside (0, 1)"));
        }
        if dim != 1 && dim != 2 {
            return invalid(format!("dim = {dim} must be 1 or 2"));
        }
        if kind == ModelKind::Relativistic && !(mass >= 0.0 && mass.is_finite()) {
            return invalid(format!("mass = {mass} must be finite and >= 0"));
        }
        if kind == ModelKind::Truncated && !(trunc_radius > 0.0 && trunc_radius.is_finite()) {
            return invalid(format!("trunc_radius = {trunc_radius} must be positive"));
        }
        let mut m = StableModel {
            kind,
            alpha,
            dim,
            mass: if kind == ModelKind::Relativistic { mass } else { 0.0 },
            trunc_radius: if kind == ModelKind::Truncated { trunc_radius } else { 0.0 },
            spectral: spectral.clone(),
            eta: 1.0,
            density_modes: vec![(1.0, 0.0)],
            factor_modes: vec![(1.0, 0.0)],
            axis_weights: vec![1.0; dim],
        };
        match (&spectral, kind) {
            (SpectralSpec::Atoms(w), ModelKind::Cylindrical) => {
                if w.len() != dim || w.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return invalid("cylindrical atoms need one positive weight per axis");
                }
                m.axis_weights = w.clone();
            }
            (SpectralSpec::Uniform, ModelKind::Cylindrical) => {}
            (SpectralSpec::Atoms(_), _) => {
                return invalid("atom weights are only meaningful for the cylindrical kind");
            }
            (_, ModelKind::Cylindrical) => {
                return invalid("cylindrical kind takes atoms or uniform (unit atoms)");
            }
            (SpectralSpec::Tabulated(w), _) => {
                if w.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return invalid("tabulated spectral density must be finite and non-negative");
                }
                if kind == ModelKind::Relativistic {
                    return invalid("relativistic kind is isotropic; use spectral = uniform");
                }
                if dim == 1 {
                    if w.len() != 2 {
                        return invalid("dimension one takes two tabulated values w(+1), w(-1)");
                    }
                    m.axis_weights = vec![0.5 * (w[0] + w[1])];
                    if m.axis_weights[0] <= 0.0 {
                        return invalid("spectral density vanishes identically");
                    }
                } else {
                    if w.len() < 4 || w.len() % 2 != 0 {
                        return invalid("tabulated density needs an even number (>= 4) of samples");
                    }
                    m.density_modes = symmetric_modes(w);
                    let g = cos_power_coeffs(alpha, m.density_modes.len());
                    let c0 = circle_normalization(alpha);
                    m.factor_modes = m
                        .density_modes
                        .iter()
                        .enumerate()
                        .map(|(k, &(a, b))| (2.0 * PI * c0 * g[k] * a, 2.0 * PI * c0 * g[k] * b))
                        .collect();
                    let scale = m.factor_modes[0].0.abs();
                    while m.factor_modes.len() > 1 && {
                        let &(a, b) = m.factor_modes.last().unwrap();
                        a.abs() + b.abs() < 1e-16 * scale
                    } {
                        m.factor_modes.pop();
                    }
                }
            }
            (SpectralSpec::Uniform, _) => {}
        }
        m.eta = m.compute_eta();
        if !m.eta.is_finite() {
            return invalid("spectral measure is degenerate");
        }
        Ok(m)
    }

    pub fn isotropic(alpha: f64, dim: usize) -> Result<Self> {
        Self::new(ModelKind::IsotropicFractional, alpha, dim, 0.0, 0.0, SpectralSpec::Uniform)
    }

    pub fn smooth(alpha: f64, dim: usize, samples: Vec<f64>) -> Result<Self> {
        Self::new(ModelKind::SmoothSpectralDensity, alpha, dim, 0.0, 0.0, SpectralSpec::Tabulated(samples))
    }

    pub fn cylindrical(alpha: f64, weights: Vec<f64>) -> Result<Self> {
        let d = weights.len();
        Self::new(ModelKind::Cylindrical, alpha, d, 0.0, 0.0, SpectralSpec::Atoms(weights))
    }

    pub fn truncated(alpha: f64, dim: usize, radius: f64) -> Result<Self> {
        Self::new(ModelKind::Truncated, alpha, dim, 0.0, radius, SpectralSpec::Uniform)
    }

    pub fn relativistic(alpha: f64, dim: usize, mass: f64) -> Result<Self> {
        Self::new(ModelKind::Relativistic, alpha, dim, mass, 0.0, SpectralSpec::Uniform)
    }

    /// The reference smooth density `w(θ) = 1 + a cos 2θ + b sin 4θ` sampled at 64 angles.
    pub fn reference_smooth(alpha: f64, dim: usize) -> Result<Self> {
        let samples = if dim == 1 {
            vec![1.3, 1.3]
        } else {
            (0..64)
                .map(|j| {
                    let th = 2.0 * PI * j as f64 / 64.0;
                    1.0 + 0.3 * (2.0 * th).cos() + 0.2 * (4.0 * th).sin()
                })
                .collect()
        };
        Self::smooth(alpha, dim, samples)
    }

    /// Directional factor `Φ(s) = ∫|⟨s, v⟩|^α μ(dv)` for a unit direction at angle `theta` (d = 2)
    /// or the scalar factor in dimension one.
    pub fn directional_factor(&self, theta: f64) -> f64 {
        if self.dim == 1 {
            return self.axis_weights[0];
        }
        match self.kind {
            ModelKind::Cylindrical => {
                let (c, s) = (theta.cos().abs(), theta.sin().abs());
                self.axis_weights[0] * c.powf(self.alpha) + self.axis_weights[1] * s.powf(self.alpha)
            }
            _ => eval_modes(&self.factor_modes, theta),
        }
    }

    /// Symmetric angular density `w(θ)` of the spectral measure (d = 2, non-atomic kinds).
    pub fn angular_density(&self, theta: f64) -> f64 {
        eval_modes(&self.density_modes, theta)
    }

    /// Lévy density of the jump measure in polar form `m(θ) ρ^{-d-α}`: returns `m(θ)`.
    /// In dimension one this is the constant in `κ|y|^{-1-α}`.
    pub fn levy_angular(&self, theta: f64) -> f64 {
        let ca = stable_radial_constant(self.alpha);
        if self.dim == 1 {
            return self.axis_weights[0] / (2.0 * ca);
        }
        circle_normalization(self.alpha) * self.angular_density(theta) / ca
    }

    /// Second angular derivative of [`Self::levy_angular`] (d = 2).
    pub fn levy_angular_dd(&self, theta: f64) -> f64 {
        let ca = stable_radial_constant(self.alpha);
        let mut s = 0.0;
        for (k, &(a, b)) in self.density_modes.iter().enumerate() {
            let w = 2.0 * k as f64;
            s -= w * w * (a * (w * theta).cos() + b * (w * theta).sin());
        }
        circle_normalization(self.alpha) * s / ca
    }

    pub fn axis_weights(&self) -> &[f64] {
        &self.axis_weights
    }

    fn compute_eta(&self) -> f64 {
        if self.dim == 1 {
            let w = self.axis_weights[0];
            return w.max(1.0 / w);
        }
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for j in 0..720 {
            let f = self.directional_factor(PI * j as f64 / 720.0);
            lo = lo.min(f);
            hi = hi.max(f);
        }
        if lo <= 0.0 {
            return f64::INFINITY;
        }
        hi.max(1.0 / lo).max(1.0)
    }

    /// The symbol `Ψ(λ)`.
    pub fn symbol(&self, lambda: &[f64]) -> Result<f64> {
        if lambda.len() != self.dim || lambda.iter().any(|v| !v.is_finite()) {
            return invalid(format!("lambda {lambda:?} must be a finite {}-vector", self.dim));
        }
        let mut l = [0.0; 2];
        l[..self.dim].copy_from_slice(lambda);
        Ok(self.symbol_at(l))
    }

    /// Unchecked symbol evaluation (λ padded to two components).
    pub fn symbol_at(&self, l: [f64; 2]) -> f64 {
        let a = self.alpha;
        let r2 = l[0] * l[0] + l[1] * l[1];
        if r2 == 0.0 {
            return 0.0;
        }
        match self.kind {
            ModelKind::Relativistic => {
                let m2 = self.mass.powf(2.0 / a);
                -(r2 + m2).powf(a / 2.0) + self.mass
            }
            ModelKind::Cylindrical => {
                -(0..self.dim).map(|k| self.axis_weights[k] * l[k].abs().powf(a)).sum::<f64>()
            }
            ModelKind::Truncated => self.truncated_symbol(l),
            _ => {
                let r = r2.sqrt();
                let th = l[1].atan2(l[0]);
                -r.powf(a) * self.directional_factor(th)
            }
        }
    }

    /// `-∫ μ(ds) |⟨λ,s⟩|^α G(K|⟨λ,s⟩|)/c_α` by sphere quadrature.
    fn truncated_symbol(&self, l: [f64; 2]) -> f64 {
        let a = self.alpha;
        let k = self.trunc_radius;
        let ca = stable_radial_constant(a);
        if self.dim == 1 {
            let x = l[0].abs();
            return -self.axis_weights[0] * x.powf(a) * truncated_radial(a, k * x) / ca;
        }
        let nodes = SPHERE_NODES;
        let c0 = circle_normalization(a);
        let mut s = 0.0;
        // the integrand is π-periodic; integrate over [0, π) and double
        for j in 0..nodes {
            let th = PI * (j as f64 + 0.5) / nodes as f64;
            let proj = (l[0] * th.cos() + l[1] * th.sin()).abs();
            if proj > 0.0 {
                s += self.angular_density(th) * proj.powf(a) * truncated_radial(a, k * proj);
            }
        }
        -2.0 * PI / nodes as f64 * c0 * s / ca
    }

    /// Symbol on every frequency of a grid (flat spectral order), cached for truncated models.
    pub fn symbol_on_grid(&self, grid: &GridSpec) -> Arc<Vec<f64>> {
        let build = || {
            let sp = crate::grid::Spectral::new(*grid);
            Arc::new((0..grid.len()).map(|i| self.symbol_at(sp.freq_vec(i))).collect::<Vec<f64>>())
        };
        if self.kind != ModelKind::Truncated {
            return build();
        }
        static CACHE: OnceLock<Mutex<HashMap<String, Arc<Vec<f64>>>>> = OnceLock::new();
        let key = format!("{:?}|{:?}", self, grid);
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(v) = cache.lock().unwrap().get(&key) {
            return v.clone();
        }
        let v = build();
        cache.lock().unwrap().insert(key, v.clone());
        v
    }

    /// Symbol by plain trapezoidal sphere quadrature with `nodes` angles (d = 2), used as a cross-check
    /// of the harmonic evaluation.
    pub fn symbol_sphere_quadrature(&self, l: [f64; 2], nodes: usize) -> f64 {
        if self.dim == 1 || self.kind == ModelKind::Cylindrical || self.kind == ModelKind::Relativistic {
            return self.symbol_at(l);
        }
        let c0 = circle_normalization(self.alpha);
        let mut s = 0.0;
        for j in 0..nodes {
            let th = 2.0 * PI * j as f64 / nodes as f64;
            s += self.angular_density(th) * (l[0] * th.cos() + l[1] * th.sin()).abs().powf(self.alpha);
        }
        -c0 * s * 2.0 * PI / nodes as f64
    }

    /// Scalar factor `σ` such that the 1-d symbol is `-σ|λ|^α` (d = 1 stable kinds).
    pub fn scale_1d(&self) -> f64 {
        self.axis_weights[0]
    }

    pub fn is_stable_kind(&self) -> bool {
        matches!(
            self.kind,
            ModelKind::IsotropicFractional | ModelKind::SmoothSpectralDensity | ModelKind::Cylindrical
        )
    }

    pub(crate) fn unsupported<T>(&self, what: &str) -> Result<T> {
        Err(LabError::Unsupported(format!("{what} for {:?}", self.kind)))
    }
}

/// Sphere quadrature nodes for the truncated symbol (on a half circle, so 512 on the full circle).
pub const SPHERE_NODES: usize = 256;

fn eval_modes(modes: &[(f64, f64)], theta: f64) -> f64 {
    let mut s = modes[0].0;
    for (k, &(a, b)) in modes.iter().enumerate().skip(1) {
        let w = 2.0 * k as f64 * theta;
        s += a * w.cos() + b * w.sin();
    }
    s
}

/// Even trigonometric modes of the symmetrized samples: `w_s(θ) = a_0 + Σ a_k cos 2kθ + b_k sin 2kθ`.
fn symmetric_modes(w: &[f64]) -> Vec<(f64, f64)> {
    let n = w.len();
    let kmax = (n / 2 - 1) / 2;
    let mut out = Vec::with_capacity(kmax + 1);
    for k in 0..=kmax {
        let m = 2 * k;
        let (mut a, mut b) = (0.0, 0.0);
        for (j, &v) in w.iter().enumerate() {
            let th = 2.0 * PI * j as f64 / n as f64;
            a += v * (m as f64 * th).cos();
            b += v * (m as f64 * th).sin();
        }
        if k == 0 {
            out.push((a / n as f64, 0.0));
        } else {
            out.push((2.0 * a / n as f64, 2.0 * b / n as f64));
        }
    }
    out
}

/// `G(x) = ∫_0^x (1 - cos r) r^{-1-α} dr`.
pub fn truncated_radial(alpha: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x <= 8.0 {
        return radial_series(alpha, x);
    }
    if x < 40.0 {
        let pieces = (x - 8.0).ceil() as usize;
        return radial_series(alpha, 8.0)
            + panel_quad(|r| (1.0 - r.cos()) * r.powf(-1.0 - alpha), 8.0, x, pieces, 16);
    }
    // c_α - x^{-α}/α + Re ∫_x^∞ e^{ir} r^{-1-α} dr, asymptotic expansion of the last term
    let s0 = 1.0 + alpha;
    let (c, sn) = (x.cos(), x.sin());
    // I = i e^{ix} x^{-s} Σ_k (-i)^k (s)_k x^{-k}
    let mut re = 0.0;
    let mut coef = x.powf(-s0);
    let mut prev = f64::INFINITY;
    for k in 0..60 {
        if coef.abs() > prev {
            break;
        }
        prev = coef.abs();
        // (i)(-i)^k e^{ix}: k mod 4 -> factor i^{1-k}
        let (fr, fi) = match k % 4 {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        };
        re += coef * (fr * c - fi * sn);
        coef *= (s0 + k as f64) / x;
    }
    stable_radial_constant(alpha) - x.powf(-alpha) / alpha + re
}

/// `Σ_{j≥1} (-1)^{j+1} x^{2j-α} / ((2j)! (2j-α))`, accurate for moderate `x`.
fn radial_series(alpha: f64, x: f64) -> f64 {
    let mut term = 1.0;
    let mut s = 0.0;
    let x2 = x * x;
    for j in 1..200 {
        let jf = j as f64;
        term *= x2 / ((2.0 * jf - 1.0) * (2.0 * jf));
        let v = term / (2.0 * jf - alpha);
        s += if j % 2 == 1 { v } else { -v };
        if v < 1e-17 * s.abs() && jf > x {
            break;
        }
    }
    s * x.powf(-alpha)
}

/// Gauss–Legendre quadrature of `f` over `[a, b]` split into `pieces` panels of `n` nodes.
pub(crate) fn panel_quad(f: impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize, n: usize) -> f64 {
    let h = (b - a) / pieces as f64;
    let mut s = 0.0;
    for p in 0..pieces {
        for (x, w) in gauss_legendre_on(n, a + p as f64 * h, a + (p + 1) as f64 * h) {
            s += w * f(x);
        }
    }
    s
}
