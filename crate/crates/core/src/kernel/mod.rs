//! Heat kernels `p_α(t,·)` with first and second derivatives on grids, and a Monte-Carlo sampler.

pub mod chebyshev;
mod persist;
mod relativistic;
mod sampling;
pub mod tails;

pub use persist::{read_density, write_density, write_radial_csv, StoredKernel};
pub use relativistic::{density_relativistic, subordinator_density, SubordinatorTable};
pub use sampling::{
    histogram_l1, ks_critical, ks_one_sample, ks_two_sample, sample_stable, sample_stable_tagged, winsorized_sd, JumpSplit,
    SamplePack,
};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::grid::{GridSpec, Spectral};
use crate::spectral_models::{ModelKind, StableModel};

/// Largest admissible `exp(tΨ)` at the Nyquist frequency.
pub const ALIAS_LIMIT: f64 = 1e-9;
/// Largest admissible mass outside the grid.
pub const TAIL_LIMIT: f64 = 0.35;

/// Sampled heat kernel and derivatives. Derivative arrays are point-major: `dp[i*d + a]`,
/// `d2p[i*d*d + a*d + b]`.
#[derive(Clone, Debug, Serialize)]
pub struct DensityField {
    pub model: StableModel,
    pub t: f64,
    pub grid: GridSpec,
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
    pub d2p: Vec<f64>,
    pub tail_mass_estimate: f64,
}

impl DensityField {
    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    /// Trapezoidal mass on the grid.
    pub fn grid_mass(&self) -> f64 {
        self.p.iter().sum::<f64>() * self.grid.cell()
    }

    /// Grid mass plus the tail estimate.
    pub fn total_mass(&self) -> f64 {
        self.grid_mass() + self.tail_mass_estimate
    }

    pub fn grad(&self, idx: usize) -> [f64; 2] {
        let d = self.dim();
        let mut g = [0.0; 2];
        g[..d].copy_from_slice(&self.dp[idx * d..idx * d + d]);
        g
    }

    pub fn hess(&self, idx: usize) -> [[f64; 2]; 2] {
        let d = self.dim();
        let mut h = [[0.0; 2]; 2];
        for a in 0..d {
            for b in 0..d {
                h[a][b] = self.d2p[idx * d * d + a * d + b];
            }
        }
        h
    }

    /// `|D^k p|` at a point: Euclidean norm for `k = 1`, operator norm for `k = 2`.
    pub fn deriv_norm(&self, idx: usize, k: usize) -> f64 {
        match k {
            0 => self.p[idx].abs(),
            1 => {
                let g = self.grad(idx);
                (g[0] * g[0] + g[1] * g[1]).sqrt()
            }
            _ => {
                let h = self.hess(idx);
                if self.dim() == 1 {
                    return h[0][0].abs();
                }
                let tr = 0.5 * (h[0][0] + h[1][1]);
                let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
                let disc = (tr * tr - det).max(0.0).sqrt();
                (tr + disc).abs().max((tr - disc).abs())
            }
        }
    }

    /// `min p / max p` (negative values come from Fourier truncation).
    pub fn negative_ringing(&self) -> f64 {
        let mx = self.p.iter().cloned().fold(f64::MIN, f64::max);
        let mn = self.p.iter().cloned().fold(f64::MAX, f64::min);
        (mn / mx).min(0.0)
    }

    /// Largest relative defect of `p(y) = p(-y)` over points whose mirror image lies on the grid.
    pub fn symmetry_defect(&self) -> f64 {
        let mx = self.p.iter().cloned().fold(0.0, f64::max);
        let n = self.grid.points_per_axis;
        (0..self.p.len())
            .filter(|&i| i % n != 0 && (self.dim() == 1 || i / n != 0))
            .map(|i| (self.p[i] - self.p[self.grid.mirror(i)]).abs() / mx)
            .fold(0.0, f64::max)
    }

    /// Value at the origin.
    pub fn at_origin(&self) -> f64 {
        let o = self.grid.origin_index();
        let idx = if self.dim() == 1 { o } else { o * self.grid.points_per_axis + o };
        self.p[idx]
    }
}

/// Raw periodized fields from the inverse DFT of `exp(tΨ)`.
pub(crate) struct Periodic {
    pub p: Vec<f64>,
    pub dp: Vec<Vec<f64>>,
    pub d2p: Vec<Vec<f64>>,
    pub nyquist_value: f64,
}

pub(crate) fn periodic_fields(model: &StableModel, t: f64, grid: &GridSpec) -> Periodic {
    let sym = model.symbol_on_grid(grid);
    let sp = Spectral::new(*grid);
    let n = grid.points_per_axis;
    let d = grid.dim;
    let cell = grid.cell();
    let mut nyq: f64 = 0.0;
    let base: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let parity = if d == 1 { i } else { i / n + i % n };
            let v = (t * sym[i]).exp();
            if (0..d).any(|a| sp.is_nyquist(i, a)) {
                nyq = nyq.max(v);
            }
            let s = if parity % 2 == 0 { 1.0 } else { -1.0 };
            Complex64::new(s * v / cell, 0.0)
        })
        .collect();
    let p = sp.inverse(base.clone());
    let mut dp = Vec::new();
    for a in 0..d {
        let m: Vec<Complex64> = base
            .iter()
            .enumerate()
            .map(|(i, v)| {
                if sp.is_nyquist(i, a) {
                    Complex64::new(0.0, 0.0)
                } else {
                    v * Complex64::new(0.0, sp.freq_vec(i)[a])
                }
            })
            .collect();
        dp.push(sp.inverse(m));
    }
    let mut d2p = Vec::new();
    for a in 0..d {
        for b in a..d {
            let m: Vec<Complex64> = base
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    if a != b && (sp.is_nyquist(i, a) || sp.is_nyquist(i, b)) {
                        Complex64::new(0.0, 0.0)
                    } else {
                        let l = sp.freq_vec(i);
                        v * (-l[a] * l[b])
                    }
                })
                .collect();
            d2p.push(sp.inverse(m));
        }
    }
    Periodic { p, dp, d2p, nyquist_value: nyq }
}

fn assemble(model: &StableModel, t: f64, grid: GridSpec, per: Periodic, tail: f64) -> DensityField {
    let d = grid.dim;
    let len = grid.len();
    let mut dp = vec![0.0; len * d];
    let mut d2p = vec![0.0; len * d * d];
    for i in 0..len {
        for a in 0..d {
            dp[i * d + a] = per.dp[a][i];
        }
        if d == 1 {
            d2p[i] = per.d2p[0][i];
        } else {
            d2p[i * 4] = per.d2p[0][i];
            d2p[i * 4 + 1] = per.d2p[1][i];
            d2p[i * 4 + 2] = per.d2p[1][i];
            d2p[i * 4 + 3] = per.d2p[2][i];
        }
    }
    DensityField { model: model.clone(), t, grid, p: per.p, dp, d2p, tail_mass_estimate: tail }
}

/// Heat kernel of a symmetric model by Fourier inversion on `grid`.
///
/// The inverse DFT yields the periodization `Σ_k p(x + 2Lk)`; for the heavy-tailed stable kinds
/// the periodic images are removed with the far-field expansion and the mass outside the grid is
/// integrated from the same expansion. Truncated models have light tails and use the shell fit.
pub fn density_fft(model: &StableModel, t: f64, grid: &GridSpec) -> Result<DensityField> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(LabError::InvalidParameter(format!("t = {t} must be positive")));
    }
    if !model.kind.is_symmetric() {
        return model.unsupported("density_fft (use density_relativistic)");
    }
    if grid.dim != model.dim {
        return Err(LabError::GridRejected("grid and model dimensions differ".into()));
    }
    let mut per = periodic_fields(model, t, grid);
    if per.nyquist_value > ALIAS_LIMIT {
        return Err(LabError::Aliasing { value: per.nyquist_value, limit: ALIAS_LIMIT });
    }
    let half = grid.half_extent;
    let n = grid.points_per_axis;
    let tail = match (model.kind, grid.dim) {
        (ModelKind::Truncated, _) => tails::shell_tail_fit(&per.p, grid).0,
        (ModelKind::Cylindrical, 2) => {
            let w = model.axis_weights();
            let g1 = GridSpec { dim: 1, ..*grid };
            let mut q = Vec::new();
            let mut img = Vec::new();
            let mut tau = Vec::new();
            for a in 0..2 {
                let m1 = StableModel::isotropic(model.alpha, 1)?;
                let per1 = periodic_fields(&m1, t * w[a], &g1);
                let series = tails::series_1d(model.alpha, t * w[a], half);
                img.push(tails::images_on_axis(&series, &g1));
                tau.push(tails::tail_1d(&series, half));
                q.push([per1.p, per1.dp[0].clone(), per1.d2p[0].clone()]);
            }
            // p_true = p_per − (q₁ᵖ⊗q₂ᵖ − q₁⊗q₂) with q = qᵖ − I; corrections for each derivative
            let corr = |ka: usize, kb: usize, i: usize, j: usize| {
                let qa = q[0][ka][i];
                let qb = q[1][kb][j];
                let ia = img[0][ka][i];
                let ib = img[1][kb][j];
                qa * qb - (qa - ia) * (qb - ib)
            };
            for idx in 0..grid.len() {
                let (i, j) = (idx / n, idx % n);
                per.p[idx] -= corr(0, 0, i, j);
                per.dp[0][idx] -= corr(1, 0, i, j);
                per.dp[1][idx] -= corr(0, 1, i, j);
                per.d2p[0][idx] -= corr(2, 0, i, j);
                per.d2p[1][idx] -= corr(1, 1, i, j);
                per.d2p[2][idx] -= corr(0, 2, i, j);
            }
            1.0 - (1.0 - tau[0]) * (1.0 - tau[1])
        }
        (_, 1) => {
            let series = tails::series_1d(model.alpha, t * model.scale_1d(), half);
            let [v, d1, d2] = tails::images_on_axis(&series, grid);
            for i in 0..n {
                per.p[i] -= v[i];
                per.dp[0][i] -= d1[i];
                per.d2p[0][i] -= d2[i];
            }
            tails::tail_1d(&series, half)
        }
        _ => {
            let series = tails::series_2d(model, t, half);
            let im = tails::images_on_plane(&series, grid);
            for i in 0..grid.len() {
                per.p[i] -= im[0][i];
                per.dp[0][i] -= im[1][i];
                per.dp[1][i] -= im[2][i];
                per.d2p[0][i] -= im[3][i];
                per.d2p[1][i] -= im[4][i];
                per.d2p[2][i] -= im[5][i];
            }
            tails::tail_2d(&series, half)
        }
    };
    if !(tail <= TAIL_LIMIT) {
        return Err(LabError::TailTooHeavy(tail));
    }
    Ok(assemble(model, t, *grid, per, tail))
}

/// Grid with `n` points per axis whose Nyquist frequency satisfies `exp(tΨ) ≤ limit`;
/// the extent follows from the spacing, so admissible grids scale like `t^{1/α}`.
pub fn admissible_grid(model: &StableModel, t: f64, n: usize, limit: f64) -> Result<GridSpec> {
    let target = (1.0 / limit).ln() / t;
    // smallest |Ψ| on the boundary of the frequency square of half-width λ grows monotonically in λ
    let worst = |lam: f64| -> f64 {
        if model.dim == 1 {
            return -model.symbol_at([lam, 0.0]);
        }
        (0..=256)
            .map(|j| {
                let s = -lam + 2.0 * lam * j as f64 / 256.0;
                (-model.symbol_at([lam, s])).min(-model.symbol_at([s, lam]))
            })
            .fold(f64::INFINITY, f64::min)
    };
    let (mut lo, mut hi) = (1e-6, 1.0);
    while worst(hi) < target {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(LabError::GridRejected("no admissible Nyquist frequency".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if worst(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h = std::f64::consts::PI / (hi * 1.01);
    GridSpec::new(model.dim, 0.5 * n as f64 * h, n)
}

/// Subordination nodes used when a relativistic kernel is built implicitly.
pub const RELATIVISTIC_NODES: usize = 2048;

/// Kernel at time `t` on the admissible grid with `n` points per axis: Fourier inversion for the
/// symmetric kinds, subordination (on the grid of the massless model) for the relativistic kind.
pub fn kernel_field(model: &StableModel, t: f64, n: usize) -> Result<DensityField> {
    if model.kind == ModelKind::Relativistic {
        let massless = StableModel::isotropic(model.alpha, model.dim)?;
        let grid = admissible_grid(&massless, t, n, ALIAS_LIMIT)?;
        return density_relativistic(model, t, &grid, RELATIVISTIC_NODES);
    }
    let grid = admissible_grid(model, t, n, ALIAS_LIMIT)?;
    density_fft(model, t, &grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn closed_form_origin_value() {
        let m = StableModel::isotropic(0.5, 1).unwrap();
        let g = GridSpec::new(1, 200.0, 1 << 16).unwrap();
        let f = density_fft(&m, 1.0, &g).unwrap();
        let rel = (f.at_origin() - 2.0 / PI).abs() / (2.0 / PI);
        assert!(rel < 1e-6, "{rel}");
        assert!((f.total_mass() - 1.0).abs() < 1e-6, "{}", f.total_mass());
    }

    #[test]
    fn aliasing_guard_trips_for_tiny_times() {
        let m = StableModel::isotropic(0.7, 1).unwrap();
        let g = GridSpec::new(1, 10.0, 256).unwrap();
        assert!(matches!(density_fft(&m, 1e-3, &g), Err(LabError::Aliasing { .. })));
    }

    #[test]
    fn normalization_over_kinds() {
        for &a in &[0.6, 0.8] {
            for d in [1usize, 2] {
                let n = if d == 1 { 1 << 14 } else { 1024 };
                for m in [
                    StableModel::isotropic(a, d).unwrap(),
                    StableModel::reference_smooth(a, d).unwrap(),
                    StableModel::cylindrical(a, vec![1.0; d]).unwrap(),
                ] {
                    let g = admissible_grid(&m, 1.0, n, ALIAS_LIMIT).unwrap();
                    let f = density_fft(&m, 1.0, &g).unwrap();
                    let err = (f.total_mass() - 1.0).abs();
                    eprintln!("{:?} a={a} d={d} L={} tail={:.3e} err={err:.2e}", m.kind, g.half_extent, f.tail_mass_estimate);
                    assert!(err < 1e-3);
                }
            }
        }
    }
}
