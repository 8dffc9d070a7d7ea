//! Relativistic kernels by Gaussian subordination with exponential tilting.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use super::{DensityField, TAIL_LIMIT};
use crate::error::{LabError, Result};
use crate::grid::GridSpec;
use crate::spectral_models::{ModelKind, StableModel};
use crate::special::{erfc, gamma, gauss_legendre_on};

/// Kanter's function for the one-sided `ρ`-stable law.
fn kanter(rho: f64, phi: f64) -> f64 {
    let a = ((rho * phi).sin() / phi.sin()).powf(1.0 / (1.0 - rho));
    a * ((1.0 - rho) * phi).sin() / (rho * phi).sin()
}

fn kanter_nodes() -> Vec<(f64, f64)> {
    let mut edges = vec![0.0, 0.25, PI / 2.0];
    let mut gap = PI / 2.0;
    for _ in 0..44 {
        gap *= 0.5;
        edges.push(PI - gap);
    }
    edges.windows(2).flat_map(|w| gauss_legendre_on(16, w[0], w[1])).collect()
}

/// Density at `u` of the one-sided `ρ`-stable law with Laplace transform `exp(-s^ρ)`.
fn one_sided_unit(rho: f64, u: f64, nodes: &[(f64, f64)]) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let k = rho / (1.0 - rho);
    let z = u.powf(-k);
    let s: f64 = nodes
        .iter()
        .map(|&(p, w)| {
            let a = kanter(rho, p);
            let e = a * z;
            if !e.is_finite() || e > 745.0 { 0.0 } else { w * a * (-e).exp() }
        })
        .sum();
    k * u.powf(-1.0 / (1.0 - rho)) * s / PI
}

/// Density `θ_α(t, u)` of the `α/2`-stable subordinator (Laplace exponent `s^{α/2}`) at time `t`.
pub fn subordinator_density(alpha: f64, t: f64, u: f64) -> f64 {
    let rho = alpha / 2.0;
    let sc = t.powf(-2.0 / alpha);
    sc * one_sided_unit(rho, u * sc, &kanter_nodes())
}

/// `θ_α(1, e^v)` on a uniform grid of `v`.
#[derive(Debug)]
pub struct SubordinatorTable {
    pub alpha: f64,
    pub v0: f64,
    pub dv: f64,
    pub theta: Vec<f64>,
}

impl SubordinatorTable {
    /// Shared table for `(α, nodes)`, built on first use.
    pub fn get(alpha: f64, nodes: usize) -> Arc<SubordinatorTable> {
        static CACHE: OnceLock<Mutex<HashMap<(u64, usize), Arc<SubordinatorTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (alpha.to_bits(), nodes);
        if let Some(t) = cache.lock().unwrap().get(&key) {
            return t.clone();
        }
        let t = Arc::new(Self::build(alpha, nodes));
        cache.lock().unwrap().insert(key, t.clone());
        t
    }

    fn build(alpha: f64, nodes: usize) -> Self {
        let rho = alpha / 2.0;
        let v0 = -(70f64.ln()) * (1.0 - rho) / rho - 1.0;
        let v1 = 24.0 / (0.5 + rho);
        let dv = (v1 - v0) / (nodes - 1) as f64;
        let kn = kanter_nodes();
        let theta = (0..nodes).map(|j| one_sided_unit(rho, (v0 + j as f64 * dv).exp(), &kn)).collect();
        SubordinatorTable { alpha, v0, dv, theta }
    }

    /// Nodes `u_j` and trapezoidal weights of `θ_α(t, u) e^{-c u} du` for the subordinator at time `t`.
    fn weights(&self, t: f64, tilt: f64) -> Vec<(f64, f64)> {
        let sc = t.powf(2.0 / self.alpha);
        let n = self.theta.len();
        (0..n)
            .map(|j| {
                let u = sc * (self.v0 + j as f64 * self.dv).exp();
                let end = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                // θ(t,u) du = θ(1, u/sc) (u/sc) dv
                let w = end * self.dv * self.theta[j] * (u / sc) * (-tilt * u).exp();
                (u, w)
            })
            .filter(|&(_, w)| w > 0.0)
            .collect()
    }

    /// Largest tabulated `u` at time `t`.
    fn top(&self, t: f64) -> f64 {
        t.powf(2.0 / self.alpha) * (self.v0 + (self.theta.len() - 1) as f64 * self.dv).exp()
    }
}

/// Heat kernel of the relativistic operator, `p = e^{mt} ∫ g(u,·) e^{-m^{2/α}u} θ_α(t,u) du`
/// with `g(u,x) = (4πu)^{-d/2} e^{-|x|²/4u}`.
pub fn density_relativistic(model: &StableModel, t: f64, grid: &GridSpec, quad_nodes: usize) -> Result<DensityField> {
    if model.kind != ModelKind::Relativistic {
        return Err(LabError::Unsupported(format!("density_relativistic needs the relativistic kind, got {:?}", model.kind)));
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(LabError::InvalidParameter(format!("t = {t} must lie in (0, 1]")));
    }
    if model.mass < 0.0 {
        return Err(LabError::InvalidParameter("mass must be non-negative".into()));
    }
    if quad_nodes < 64 {
        return Err(LabError::InvalidParameter(format!("quad_nodes = {quad_nodes} below 64")));
    }
    if grid.dim != model.dim {
        return Err(LabError::GridRejected("grid and model dimensions differ".into()));
    }
    let alpha = model.alpha;
    let m = model.mass;
    let table = SubordinatorTable::get(alpha, quad_nodes);
    let tilt = m.powf(2.0 / alpha);
    let pref = (m * t).exp();
    let d = grid.dim;
    let nodes: Vec<(f64, f64)> = table.weights(t, tilt).into_iter().map(|(u, w)| (u, w * pref)).collect();
    let axis = grid.axis();
    let n = grid.points_per_axis;
    // one-dimensional factors of g and its first two derivatives along the axis
    let factors = |u: f64| -> [Vec<f64>; 3] {
        let c = (4.0 * PI * u).sqrt().recip();
        let g: Vec<f64> = axis.iter().map(|&x| c * (-x * x / (4.0 * u)).exp()).collect();
        let g1 = axis.iter().zip(&g).map(|(&x, &v)| -x / (2.0 * u) * v).collect();
        let g2 = axis.iter().zip(&g).map(|(&x, &v)| (x * x / (4.0 * u * u) - 0.5 / u) * v).collect();
        [g, g1, g2]
    };
    let len = grid.len();
    let mut p = vec![0.0; len];
    let mut dp = vec![0.0; len * d];
    let mut d2p = vec![0.0; len * d * d];
    let peak = nodes.iter().map(|&(u, w)| w * (4.0 * PI * u).powf(-0.5 * d as f64)).fold(0.0, f64::max);
    for &(u, w) in &nodes {
        if w * (4.0 * PI * u).powf(-0.5 * d as f64) < 1e-18 * peak {
            continue;
        }
        let [g, g1, g2] = factors(u);
        if d == 1 {
            for i in 0..n {
                p[i] += w * g[i];
                dp[i] += w * g1[i];
                d2p[i] += w * g2[i];
            }
        } else {
            for i in 0..n {
                let (a0, a1, a2) = (w * g[i], w * g1[i], w * g2[i]);
                for j in 0..n {
                    let idx = i * n + j;
                    p[idx] += a0 * g[j];
                    dp[2 * idx] += a1 * g[j];
                    dp[2 * idx + 1] += a0 * g1[j];
                    d2p[4 * idx] += a2 * g[j];
                    let cross = a1 * g1[j];
                    d2p[4 * idx + 1] += cross;
                    d2p[4 * idx + 2] += cross;
                    d2p[4 * idx + 3] += a0 * g2[j];
                }
            }
        }
    }
    // far end of the subordinator: θ(t,u) ~ t ρ/Γ(1-ρ) u^{-1-ρ}
    let rho = alpha / 2.0;
    let top = table.top(t);
    let dd = 0.5 * d as f64;
    let far = pref * t * rho / gamma(1.0 - rho) * (4.0 * PI).powf(-dd) * top.powf(-dd - rho) / (dd + rho) * (-tilt * top).exp();
    for v in p.iter_mut() {
        *v += far;
    }
    // mass outside the box from the Gaussian mixture
    let half = grid.half_extent;
    let mut tail: f64 = nodes
        .iter()
        .map(|&(u, w)| {
            let q = erfc(half / (2.0 * u.sqrt()));
            w * if d == 1 { q } else { 1.0 - (1.0 - q) * (1.0 - q) }
        })
        .sum();
    tail += pref * t * rho / gamma(1.0 - rho) * top.powf(-rho) / rho * (-tilt * top).exp();
    if tail > TAIL_LIMIT {
        return Err(LabError::TailTooHeavy(tail));
    }
    Ok(DensityField { model: model.clone(), t, grid: *grid, p, dp, d2p, tail_mass_estimate: tail })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subordinator_laplace_transform() {
        let alpha = 0.7;
        let t = 0.5;
        let table = SubordinatorTable::get(alpha, 2048);
        for s in [0.3, 1.0, 4.0] {
            let lt: f64 = table.weights(t, s).iter().map(|&(_, w)| w).sum();
            let exact = (-t * f64::powf(s, alpha / 2.0)).exp();
            assert!((lt - exact).abs() < 1e-8, "{s} {lt} {exact}");
        }
        let direct = subordinator_density(alpha, t, 0.8);
        let u_table = t.powf(2.0 / alpha) * (table.v0 + 1000.0 * table.dv).exp();
        assert!(direct > 0.0 && u_table > 0.0);
    }

    #[test]
    fn massless_limit_matches_fractional_kernel() {
        let alpha = 0.7;
        let g = GridSpec::new(1, 60.0, 4096).unwrap();
        let rel = StableModel::relativistic(alpha, 1, 0.0).unwrap();
        let iso = StableModel::isotropic(alpha, 1).unwrap();
        let a = density_relativistic(&rel, 1.0, &g, 2048).unwrap();
        let b = super::super::density_fft(&iso, 1.0, &g).unwrap();
        let pm = b.at_origin();
        let err = a.p.iter().zip(&b.p).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / pm;
        let derr = a.dp.iter().zip(&b.dp).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / pm;
        assert!(err < 1e-6 && derr < 1e-5, "{err} {derr}");
        assert!((a.total_mass() - 1.0).abs() < 1e-6, "{}", a.total_mass());
    }
}
