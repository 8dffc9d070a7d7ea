//! Moment integrals of heat kernels and their derivatives, smoothing exponents, pointwise
//! derivative envelopes and the divergence of cylindrical moments.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::grid::interp1_clamped;
use crate::kernel::tails::{power_tail_outside, series_1d, shell_power_fit};
use crate::kernel::{admissible_grid, density_fft, kernel_field, DensityField, ALIAS_LIMIT};
use crate::spectral_models::{ModelKind, StableModel};
use crate::special::{gauss_legendre_on, ols};

/// Largest admissible ratio of the analytic tail to the on-grid integral.
pub const TAIL_DOMINATED: f64 = 0.25;
/// Default slope tolerance.
pub const SLOPE_TOL: f64 = 0.05;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MomentValue {
    pub value: f64,
    pub on_grid: f64,
    pub tail: f64,
    pub tail_fraction: f64,
}

/// Pointwise `|D^k p|` (Euclidean norm for the gradient, operator norm for the Hessian).
pub fn derivative_magnitude(field: &DensityField, k: usize) -> Vec<f64> {
    (0..field.p.len()).map(|i| field.deriv_norm(i, k)).collect()
}

/// `∫|y|^γ |D^k p(t,y)| dy`: trapezoidal sum on the grid plus the tail of a power law fitted on the
/// outer shell.
pub fn moment_integral(field: &DensityField, gamma: f64, k: usize) -> Result<MomentValue> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(LabError::InvalidParameter(format!("moment exponent {gamma} outside [0, 1]")));
    }
    if k > 2 {
        return Err(LabError::InvalidParameter(format!("derivative order {k} > 2")));
    }
    let g = &field.grid;
    let mag = derivative_magnitude(field, k);
    let on_grid: f64 = mag
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let y = g.point(i);
            (y[0] * y[0] + y[1] * y[1]).powf(0.5 * gamma) * v
        })
        .sum::<f64>()
        * g.cell();
    let tail = match shell_power_fit(&mag, g) {
        None => 0.0,
        Some((c, slope)) => power_tail_outside(c, slope, gamma, g),
    };
    let tail_fraction = tail / on_grid;
    if !(tail_fraction <= TAIL_DOMINATED) {
        return Err(LabError::TailDominated(tail_fraction));
    }
    Ok(MomentValue { value: on_grid + tail, on_grid, tail, tail_fraction })
}

/// Times `2^{-j}`, `j = jmax, …, 0`, increasing.
pub fn time_ladder(jmax: u32) -> Vec<f64> {
    (0..=jmax).rev().map(|j| 2f64.powi(-(j as i32))).collect()
}

/// Default points per axis for probe grids.
pub fn default_points(dim: usize) -> usize {
    if dim == 1 { 1 << 16 } else { 1 << 10 }
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentProbe {
    pub kind: ModelKind,
    pub alpha: f64,
    pub dim: usize,
    pub derivative_order: usize,
    pub gamma: f64,
    pub t_values: Vec<f64>,
    pub integrals: Vec<f64>,
    pub tail_fractions: Vec<f64>,
    pub fitted_slope: f64,
    pub theoretical_slope: f64,
}

impl MomentProbe {
    pub fn passes(&self, tol: f64) -> bool {
        self.fitted_slope.is_finite() && (self.fitted_slope - self.theoretical_slope).abs() <= tol
    }

    /// CSV with columns `t, I_k, tail_fraction`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "t,I_{},tail_fraction", self.derivative_order)?;
        for i in 0..self.t_values.len() {
            writeln!(w, "{},{:e},{:e}", self.t_values[i], self.integrals[i], self.tail_fractions[i])?;
        }
        Ok(())
    }
}

fn check_times(t_values: &[f64]) -> Result<()> {
    if t_values.len() < 2 || t_values.windows(2).any(|w| w[1] <= w[0]) || t_values[0] <= 0.0 {
        return Err(LabError::InvalidParameter("t values must be positive and strictly increasing".into()));
    }
    Ok(())
}

fn fit_probe(model: &StableModel, k: usize, gamma: f64, t_values: &[f64], values: &[MomentValue]) -> MomentProbe {
    let lx: Vec<f64> = t_values.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.value.ln()).collect();
    MomentProbe {
        kind: model.kind,
        alpha: model.alpha,
        dim: model.dim,
        derivative_order: k,
        gamma,
        t_values: t_values.to_vec(),
        integrals: values.iter().map(|v| v.value).collect(),
        tail_fractions: values.iter().map(|v| v.tail_fraction).collect(),
        fitted_slope: ols(&lx, &ly).0,
        theoretical_slope: (gamma - k as f64) / model.alpha,
    }
}

/// Moment probes for several derivative orders sharing one kernel per time.
pub fn moment_probes(model: &StableModel, gamma: f64, orders: &[usize], t_values: &[f64], n: usize) -> Result<Vec<MomentProbe>> {
    check_times(t_values)?;
    let per_t: Vec<Vec<MomentValue>> = t_values
        .par_iter()
        .map(|&t| {
            let f = kernel_field(model, t, n)?;
            orders.iter().map(|&k| moment_integral(&f, gamma, k)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(orders
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let vals: Vec<MomentValue> = per_t.iter().map(|v| v[j]).collect();
            fit_probe(model, k, gamma, t_values, &vals)
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct PbetaReport {
    pub beta: f64,
    pub first: MomentProbe,
    pub second: MomentProbe,
    pub pass: bool,
}

impl PbetaReport {
    pub fn verdict_json(&self) -> serde_json::Value {
        serde_json::json!({
            "beta": self.beta,
            "kind": self.first.kind,
            "alpha": self.first.alpha,
            "fitted": [self.first.fitted_slope, self.second.fitted_slope],
            "theoretical": [self.first.theoretical_slope, self.second.theoretical_slope],
            "verdict": if self.pass { "PASS" } else { "FAIL" },
        })
    }
}

/// Whether the smoothing property can hold for `(model, β)`: kinds without full-sphere spectral
/// support need `β < α`, and planar cylindrical models are divergent beyond that.
pub fn pbeta_admissible(model: &StableModel, beta: f64) -> Result<()> {
    let any_beta = matches!(
        model.kind,
        ModelKind::IsotropicFractional | ModelKind::SmoothSpectralDensity | ModelKind::Relativistic
    );
    if !any_beta && beta >= model.alpha {
        if model.kind == ModelKind::Cylindrical && model.dim == 2 {
            return Err(LabError::Divergent(format!(
                "cylindrical moments of order β = {beta} ≥ α = {} are infinite",
                model.alpha
            )));
        }
        if model.kind != ModelKind::Cylindrical {
            return Err(LabError::InvalidParameter(format!("{:?} needs β < α", model.kind)));
        }
    }
    Ok(())
}

/// Smoothing exponents of `∫|y|^β |D^k p(t,y)| dy`, `k = 1, 2`, against `(β − k)/α`.
pub fn pbeta_report(model: &StableModel, beta: f64, t_values: &[f64], n: usize) -> Result<PbetaReport> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(LabError::InvalidParameter(format!("β = {beta} outside (0, 1)")));
    }
    pbeta_admissible(model, beta)?;
    let mut probes = moment_probes(model, beta, &[1, 2], t_values, n)?;
    let second = probes.pop().unwrap();
    let first = probes.pop().unwrap();
    let pass = first.passes(SLOPE_TOL) && second.passes(SLOPE_TOL);
    Ok(PbetaReport { beta, first, second, pass })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Envelopes {
    pub t: f64,
    pub threshold: f64,
    /// `sup |Dp| / ((t^{-1/α} ∧ |y|^{-1}) p)`
    pub gradient: f64,
    /// `sup_{|y| ≤ K t^{1/α}} |D²p| / (t^{-2/α} p)`
    pub hessian_inner: f64,
    /// `sup_{|y| > K t^{1/α}} |D²p| / (t^{-1} |y|^{α-2} p)`
    pub hessian_outer: f64,
}

impl Envelopes {
    pub fn as_array(&self) -> [f64; 3] {
        [self.gradient, self.hessian_inner, self.hessian_outer]
    }

    pub fn finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite() && *v > 0.0)
    }
}

/// Empirical Kolokoltsov envelopes of the first and second derivatives relative to the kernel.
pub fn kolokoltsov_check(field: &DensityField, threshold: f64) -> Result<Envelopes> {
    let kind = field.model.kind;
    if !matches!(kind, ModelKind::IsotropicFractional | ModelKind::SmoothSpectralDensity) {
        return field.model.unsupported("kolokoltsov_check");
    }
    let a = field.model.alpha;
    let t = field.t;
    let scale = t.powf(1.0 / a);
    let pmax = field.p.iter().cloned().fold(0.0, f64::max);
    let g = &field.grid;
    let mut env = Envelopes { t, threshold, gradient: 0.0, hessian_inner: 0.0, hessian_outer: 0.0 };
    for i in 0..field.p.len() {
        let p = field.p[i];
        if p < 1e-14 * pmax {
            continue;
        }
        let y = g.point(i);
        let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
        let d1 = field.deriv_norm(i, 1);
        let d2 = field.deriv_norm(i, 2);
        let w1 = if r > 0.0 { (1.0 / scale).min(1.0 / r) } else { 1.0 / scale };
        env.gradient = env.gradient.max(d1 / (w1 * p));
        if r <= threshold * scale {
            env.hessian_inner = env.hessian_inner.max(d2 / (p / (scale * scale)));
        } else {
            env.hessian_outer = env.hessian_outer.max(d2 / (r.powf(a - 2.0) * p / t));
        }
    }
    Ok(env)
}

/// Largest relative spread `max/min − 1` of each envelope across a set of reports.
pub fn envelope_spread(reports: &[Envelopes]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (j, o) in out.iter_mut().enumerate() {
        let v: Vec<f64> = reports.iter().map(|r| r.as_array()[j]).collect();
        let mx = v.iter().cloned().fold(f64::MIN, f64::max);
        let mn = v.iter().cloned().fold(f64::MAX, f64::min);
        *o = mx / mn - 1.0;
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceReport {
    pub gamma: f64,
    pub derivative_order: usize,
    pub extents: Vec<f64>,
    pub integrals: Vec<f64>,
    /// `I(L_{i+1}) / I(L_i) − 1`.
    pub growth: Vec<f64>,
    pub divergent: bool,
}

/// Growth per step required to certify divergence.
pub const DIVERGENCE_GROWTH: f64 = 0.30;

/// One-dimensional kernel with symbol `-τ|λ|^α` and its derivatives at arbitrary points: the Fourier
/// grid inside, the convergent far-field series outside.
struct AxisKernel {
    field: DensityField,
    series: Vec<(f64, f64)>,
    inner: f64,
}

impl AxisKernel {
    fn new(alpha: f64, tau: f64) -> Result<Self> {
        let m = StableModel::isotropic(alpha, 1)?;
        let g = admissible_grid(&m, tau, 1 << 16, ALIAS_LIMIT)?;
        let field = density_fft(&m, tau, &g)?;
        let inner = 0.8 * g.half_extent;
        Ok(AxisKernel { series: series_1d(alpha, tau, inner), field, inner })
    }

    fn eval(&self, x: f64) -> [f64; 3] {
        let ax = x.abs();
        if ax <= self.inner {
            let g = &self.field.grid;
            return [
                interp1_clamped(g, &self.field.p, x),
                interp1_clamped(g, &self.field.dp, x),
                interp1_clamped(g, &self.field.d2p, x),
            ];
        }
        let mut out = [0.0; 3];
        for &(c, s) in &self.series {
            out[0] += c * ax.powf(-s);
            out[1] -= c * s * ax.powf(-s - 1.0);
            out[2] += c * s * (s + 1.0) * ax.powf(-s - 2.0);
        }
        out[1] *= x.signum();
        out
    }
}

/// Quadrature nodes on `[0, L]`: fine panels over the core, geometric panels beyond.
fn half_line_nodes(core: f64, extent: f64) -> Vec<(f64, f64)> {
    let mut edges = Vec::new();
    let c = core.min(extent);
    let pieces = 240;
    for j in 0..=pieces {
        edges.push(c * j as f64 / pieces as f64);
    }
    let mut x = c;
    while x < extent {
        x = (x * 1.15).min(extent);
        edges.push(x);
    }
    edges.windows(2).flat_map(|w| gauss_legendre_on(8, w[0], w[1])).collect()
}

/// `∫_{[-L,L]²} |y|^γ |D^k p(t,y)| dy` for a planar cylindrical model over increasing extents `L`.
pub fn cylindrical_divergence(model: &StableModel, gamma: f64, k: usize, t: f64, extents: &[f64]) -> Result<DivergenceReport> {
    if model.kind != ModelKind::Cylindrical || model.dim != 2 {
        return Err(LabError::InvalidParameter("divergence certification needs a planar cylindrical model".into()));
    }
    if k > 2 || extents.len() < 2 || extents.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::InvalidParameter("need k ≤ 2 and increasing extents".into()));
    }
    let w = model.axis_weights();
    let a = model.alpha;
    let axes = [AxisKernel::new(a, t * w[0])?, AxisKernel::new(a, t * w[1])?];
    let core = 20.0 * (t * w[0].max(w[1])).powf(1.0 / a);
    let integrals: Vec<f64> = extents
        .par_iter()
        .map(|&ext| {
            let nodes = half_line_nodes(core, ext);
            let q: Vec<Vec<[f64; 3]>> = axes.iter().map(|ax| nodes.iter().map(|&(x, _)| ax.eval(x)).collect()).collect();
            let mut s = 0.0;
            for (i, &(x1, w1)) in nodes.iter().enumerate() {
                let a1 = q[0][i];
                for (j, &(x2, w2)) in nodes.iter().enumerate() {
                    let a2 = q[1][j];
                    let mag = match k {
                        0 => (a1[0] * a2[0]).abs(),
                        1 => ((a1[1] * a2[0]).powi(2) + (a1[0] * a2[1]).powi(2)).sqrt(),
                        _ => {
                            let (h11, h12, h22) = (a1[2] * a2[0], a1[1] * a2[1], a1[0] * a2[2]);
                            let tr = 0.5 * (h11 + h22);
                            let disc = ((0.5 * (h11 - h22)).powi(2) + h12 * h12).sqrt();
                            (tr + disc).abs().max((tr - disc).abs())
                        }
                    };
                    s += w1 * w2 * (x1 * x1 + x2 * x2).powf(0.5 * gamma) * mag;
                }
            }
            4.0 * s
        })
        .collect();
    let growth: Vec<f64> = integrals.windows(2).map(|v| v[1] / v[0] - 1.0).collect();
    let divergent = growth.iter().all(|&g| g >= DIVERGENCE_GROWTH);
    Ok(DivergenceReport { gamma, derivative_order: k, extents: extents.to_vec(), integrals, growth, divergent })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_moment() {
        let m = StableModel::isotropic(0.6, 1).unwrap();
        let f = kernel_field(&m, 1.0, 1 << 16).unwrap();
        let v = moment_integral(&f, 0.0, 0).unwrap();
        assert!((v.value - 1.0).abs() < 1e-3, "{v:?}");
    }

    #[test]
    fn heavy_moment_is_tail_dominated() {
        let m = StableModel::isotropic(0.6, 1).unwrap();
        let f = kernel_field(&m, 1.0, 1 << 12).unwrap();
        assert!(matches!(moment_integral(&f, 0.59, 0), Err(LabError::TailDominated(_))));
    }

    #[test]
    fn ladder_is_increasing() {
        let l = time_ladder(6);
        assert_eq!(l.len(), 7);
        assert_eq!(l[0], 1.0 / 64.0);
        assert_eq!(l[6], 1.0);
    }
}
