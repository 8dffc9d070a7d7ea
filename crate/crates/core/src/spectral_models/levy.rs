//! Application of `L_α` to grid functions: spectral multiplier or singular quadrature stencil.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lattice::{image_sum_2d, AngularPower};
use super::{ModelKind, StableModel};
use crate::error::{LabError, Result};
use crate::grid::{GridSpec, Spectral};
use crate::special::{gauss_legendre_on, hurwitz_zeta};

/// Split radius between the compensated inner integral and the outer integral.
pub const SPLIT_RADIUS: f64 = 1.0;

/// Minimal stencil half-width (in cells) integrated exactly.
const MIN_NEAR: i64 = 16;

/// How a grid function is continued outside the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    Periodic,
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevyPath {
    Spectral,
    Quadrature,
}

/// Translation-invariant quadrature weights: `L_h φ_i = Σ_j W_j (φ_{i+j} − φ_i)` on the periodic grid.
///
/// `W_j = ∫ ℓ_j(y) ν(dy)` where `ℓ_j` is the cubic Lagrange cardinal function of node `j`; weights
/// are exact (up to quadrature rounding) inside the near region and midpoint-rule outside, where the
/// cardinal functions have vanishing second moments.
#[derive(Clone, Debug)]
pub struct LevyStencil {
    pub grid: GridSpec,
    /// Weights indexed by offset modulo `N` per axis (flat, row-major); entry 0 is unused.
    pub weights: Vec<f64>,
    multiplier: Vec<f64>,
}

impl LevyStencil {
    /// Discrete symbol `Σ_j W_j (cos⟨λ_k, x_j⟩ − 1)` on the grid frequencies.
    pub fn discrete_symbol(&self) -> &[f64] {
        &self.multiplier
    }

    /// Apply with periodic extension.
    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        let sp = Spectral::new(self.grid);
        let mut d = sp.forward(phi);
        for (v, m) in d.iter_mut().zip(&self.multiplier) {
            *v *= *m;
        }
        sp.inverse(d)
    }

    /// `Γ(u, η)(x) = Σ_j W_j (u_{i+j} − u_i)(η_{i+j} − η_i)` via `L(uη) − u Lη − η Lu`.
    pub fn carre_du_champ(&self, u: &[f64], eta: &[f64]) -> Vec<f64> {
        let prod: Vec<f64> = u.iter().zip(eta).map(|(a, b)| a * b).collect();
        let lp = self.apply(&prod);
        let le = self.apply(eta);
        let lu = self.apply(u);
        (0..u.len()).map(|i| lp[i] - u[i] * le[i] - eta[i] * lu[i]).collect()
    }

    /// Direct evaluation of the bilinear sum at one flat index (O(N^d), for checks).
    pub fn carre_du_champ_at(&self, u: &[f64], eta: &[f64], idx: usize) -> f64 {
        let n = self.grid.points_per_axis;
        let mut s = 0.0;
        if self.grid.dim == 1 {
            for j in 1..n {
                let k = (idx + j) % n;
                s += self.weights[j] * (u[k] - u[idx]) * (eta[k] - eta[idx]);
            }
        } else {
            let (i0, i1) = (idx / n, idx % n);
            for a in 0..n {
                for b in 0..n {
                    if a == 0 && b == 0 {
                        continue;
                    }
                    let k = ((i0 + a) % n) * n + (i1 + b) % n;
                    s += self.weights[a * n + b] * (u[k] - u[idx]) * (eta[k] - eta[idx]);
                }
            }
        }
        s
    }
}

fn signed(j: usize, n: usize) -> i64 {
    if j <= n / 2 { j as i64 } else { j as i64 - n as i64 }
}

/// Polynomial (ascending coefficients in `u`) of the cardinal function `ℓ(u − j)` on the cell `[m, m+1]`.
fn cardinal_piece(j: i64, m: i64) -> [f64; 4] {
    let w0 = m - j;
    // roots (in w) and leading constant of each cubic piece
    let (roots, c): ([f64; 3], f64) = match w0 {
        0 => ([-1.0, 1.0, 2.0], 0.5),
        1 => ([1.0, 2.0, 3.0], -1.0 / 6.0),
        -1 => ([-2.0, -1.0, 1.0], -0.5),
        -2 => ([-1.0, -2.0, -3.0], 1.0 / 6.0),
        _ => return [0.0; 4],
    };
    // Π (u − j − r)
    let mut p = [c, 0.0, 0.0, 0.0];
    let mut deg = 0;
    for r in roots {
        let shift = j as f64 + r;
        let mut q = [0.0; 4];
        for k in 0..=deg {
            q[k + 1] += p[k];
            q[k] -= shift * p[k];
        }
        p = q;
        deg += 1;
    }
    p
}

/// `∫ ℓ(u − j) |u|^{-1-α} 1_{|u| ≤ cut} du` over the real line (unit cells).
fn near_weight_1d(alpha: f64, j: i64, cut: f64) -> f64 {
    let mut s = 0.0;
    for m in (j - 2)..=(j + 1) {
        let (a, b) = (m as f64, (m + 1) as f64);
        if m == 0 || m == -1 {
            // polynomial in v = |u| on [0, 1], vanishing at 0: exact monomial integration
            let p = cardinal_piece(j, m);
            let sg: f64 = if m == 0 { 1.0 } else { -1.0 };
            let top = cut.min(1.0);
            for (k, &c) in p.iter().enumerate().skip(1) {
                let ck = c * sg.powi(k as i32);
                s += ck * top.powf(k as f64 - alpha) / (k as f64 - alpha);
            }
        } else {
            let lo = a.abs().min(b.abs());
            if lo >= cut {
                continue;
            }
            let (a2, b2) = if m >= 1 { (a, b.min(cut)) } else { (a.max(-cut), b) };
            for (u, w) in gauss_legendre_on(10, a2, b2) {
                s += w * crate::grid::cubic_cardinal(u - j as f64) * u.abs().powf(-1.0 - alpha);
            }
        }
    }
    s
}

/// Wrapped 1-d stencil in cell units scaled by `κ h^{-α}`.
fn stencil_1d(alpha: f64, kappa: f64, grid: &GridSpec, trunc: Option<f64>) -> Result<Vec<f64>> {
    let n = grid.points_per_axis;
    let h = grid.spacing();
    let scale = kappa * h.powf(-alpha);
    let cut = trunc.map(|k| k / h).unwrap_or(f64::INFINITY);
    let near = match trunc {
        Some(_) => cut.ceil() as i64 + 2,
        None => ((SPLIT_RADIUS / h).ceil() as i64).max(MIN_NEAR),
    };
    if near >= (n / 2) as i64 - 1 {
        return Err(LabError::GridRejected(format!(
            "stencil half-width {near} does not fit a grid of {n} points"
        )));
    }
    let near_w: Vec<f64> = (0..=near).map(|j| if j == 0 { 0.0 } else { near_weight_1d(alpha, j, cut) }).collect();
    let s1 = 1.0 + alpha;
    let nf = n as f64;
    let w = (0..n)
        .map(|j| {
            if j == 0 {
                return 0.0;
            }
            let jj = signed(j, n);
            let a = jj.unsigned_abs() as i64;
            let mut v = if a <= near {
                near_w[a as usize]
            } else if trunc.is_none() {
                (a as f64).powf(-s1)
            } else {
                0.0
            };
            if trunc.is_none() {
                let x = jj as f64 / nf;
                v += nf.powf(-s1) * (hurwitz_zeta(s1, 1.0 + x) + hurwitz_zeta(s1, 1.0 - x));
            }
            v * scale
        })
        .collect();
    Ok(w)
}

/// `∫∫ ℓ(u₁ − j₁) ℓ(u₂ − j₂) m(θ) |u|^{-2-α} 1_{|u| ≤ cut} du` (unit cells).
fn near_weight_2d(alpha: f64, m: &(dyn Fn(f64) -> f64 + Sync), j: (i64, i64), cut: f64) -> f64 {
    let mut s = 0.0;
    for m1 in (j.0 - 2)..=(j.0 + 1) {
        for m2 in (j.1 - 2)..=(j.1 + 1) {
            let touches = (m1 == 0 || m1 == -1) && (m2 == 0 || m2 == -1);
            if touches {
                s += origin_cell(alpha, m, j, (m1, m2), cut);
                continue;
            }
            let (a1, b1) = (m1 as f64, (m1 + 1) as f64);
            let (a2, b2) = (m2 as f64, (m2 + 1) as f64);
            let nearest = {
                let c1 = 0f64.clamp(a1, b1);
                let c2 = 0f64.clamp(a2, b2);
                (c1 * c1 + c2 * c2).sqrt()
            };
            if nearest >= cut {
                continue;
            }
            let q1 = gauss_legendre_on(8, a1, b1);
            let q2 = gauss_legendre_on(8, a2, b2);
            for &(u1, w1) in &q1 {
                let l1 = crate::grid::cubic_cardinal(u1 - j.0 as f64);
                for &(u2, w2) in &q2 {
                    let r2 = u1 * u1 + u2 * u2;
                    if r2 > cut * cut {
                        continue;
                    }
                    let l2 = crate::grid::cubic_cardinal(u2 - j.1 as f64);
                    s += w1 * w2 * l1 * l2 * m(u2.atan2(u1)) * r2.powf(-1.0 - alpha / 2.0);
                }
            }
        }
    }
    s
}

/// Polar integration over a unit cell with a corner at the origin; the integrand polynomial
/// vanishes at the origin so the radial integral is done exactly term by term.
fn origin_cell(alpha: f64, m: &(dyn Fn(f64) -> f64 + Sync), j: (i64, i64), cell: (i64, i64), cut: f64) -> f64 {
    let p1 = cardinal_piece(j.0, cell.0);
    let p2 = cardinal_piece(j.1, cell.1);
    if p1.iter().all(|v| *v == 0.0) || p2.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    let sg1: f64 = if cell.0 == 0 { 1.0 } else { -1.0 };
    let sg2: f64 = if cell.1 == 0 { 1.0 } else { -1.0 };
    let mut s = 0.0;
    let quarter = std::f64::consts::FRAC_PI_4;
    for (lo, hi) in [(0.0, quarter), (quarter, 2.0 * quarter)] {
        for (th, wt) in gauss_legendre_on(20, lo, hi) {
            let (c, sn) = (th.cos(), th.sin());
            let rmax = if th < quarter { 1.0 / c } else { 1.0 / sn }.min(cut);
            // coefficients in ρ of ℓ(σ₁ρc − j₁) ℓ(σ₂ρs − j₂)
            let mut a = [0.0; 4];
            let mut b = [0.0; 4];
            for k in 0..4 {
                a[k] = p1[k] * (sg1 * c).powi(k as i32);
                b[k] = p2[k] * (sg2 * sn).powi(k as i32);
            }
            let mut rad = 0.0;
            for k in 1..=6usize {
                let mut ck = 0.0;
                for i in 0..=k.min(3) {
                    if k - i <= 3 {
                        ck += a[i] * b[k - i];
                    }
                }
                rad += ck * rmax.powf(k as f64 - alpha) / (k as f64 - alpha);
            }
            s += wt * rad * m((sg2 * sn).atan2(sg1 * c));
        }
    }
    s
}

/// Build the quadrature stencil of `model` on `grid` (periodic).
pub fn levy_stencil(model: &StableModel, grid: &GridSpec) -> Result<LevyStencil> {
    if grid.dim != model.dim {
        return Err(LabError::GridRejected("grid and model dimensions differ".into()));
    }
    let h = grid.spacing();
    if h > SPLIT_RADIUS / 4.0 {
        return Err(LabError::GridRejected(format!(
            "spacing {h} exceeds split radius / 4 = {}",
            SPLIT_RADIUS / 4.0
        )));
    }
    if model.kind == ModelKind::Relativistic {
        return model.unsupported("quadrature path");
    }
    let alpha = model.alpha;
    let ca = crate::special::stable_radial_constant(alpha);
    let trunc = (model.kind == ModelKind::Truncated).then_some(model.trunc_radius);
    let n = grid.points_per_axis;
    let weights = if grid.dim == 1 {
        let kappa = model.axis_weights()[0] / (2.0 * ca);
        stencil_1d(alpha, kappa, grid, trunc)?
    } else if model.kind == ModelKind::Cylindrical {
        let mut w = vec![0.0; n * n];
        for axis in 0..2 {
            let kappa = model.axis_weights()[axis] / (2.0 * ca);
            let line = stencil_1d(alpha, kappa, grid, None)?;
            for (j, v) in line.iter().enumerate() {
                let idx = if axis == 0 { j * n } else { j };
                w[idx] += v;
            }
        }
        w
    } else {
        stencil_2d(model, grid, trunc)?
    };
    let sp = Spectral::new(*grid);
    let total: f64 = weights.iter().sum();
    let multiplier = sp.forward(&weights).iter().map(|v| v.re - total).collect();
    Ok(LevyStencil { grid: *grid, weights, multiplier })
}

fn stencil_2d(model: &StableModel, grid: &GridSpec, trunc: Option<f64>) -> Result<Vec<f64>> {
    let n = grid.points_per_axis;
    let h = grid.spacing();
    let alpha = model.alpha;
    let scale = h.powf(-alpha);
    let cut = trunc.map(|k| k / h).unwrap_or(f64::INFINITY);
    let near = match trunc {
        Some(_) => cut.ceil() as i64 + 2,
        None => ((SPLIT_RADIUS / h).ceil() as i64).max(MIN_NEAR),
    };
    if near >= (n / 2) as i64 - 1 {
        return Err(LabError::GridRejected(format!(
            "stencil half-width {near} does not fit a grid of {n} points"
        )));
    }
    let om = |t: f64| model.levy_angular(t);
    let omdd = |t: f64| model.levy_angular_dd(t);
    let s = 2.0 + alpha;
    let f = AngularPower { omega: &om, omega_dd: &omdd, s };
    let nf = n as f64;
    let w: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            if idx == 0 {
                return 0.0;
            }
            let j = (signed(idx / n, n), signed(idx % n, n));
            let mut v = if j.0.abs() <= near && j.1.abs() <= near {
                near_weight_2d(alpha, &om, j, cut)
            } else if trunc.is_none() {
                f.eval([j.0 as f64, j.1 as f64])
            } else {
                0.0
            };
            if trunc.is_none() {
                v += image_sum_2d(&f, [j.0 as f64, j.1 as f64], nf, 4);
            }
            v * scale
        })
        .collect();
    Ok(w)
}

/// Apply `L_α` to a grid function.
pub fn levy_apply(
    model: &StableModel,
    phi: &[f64],
    grid: &GridSpec,
    ext: Extension,
    path: LevyPath,
) -> Result<Vec<f64>> {
    if phi.len() != grid.len() {
        return Err(LabError::InvalidParameter("phi does not match the grid".into()));
    }
    if grid.dim != model.dim {
        return Err(LabError::GridRejected("grid and model dimensions differ".into()));
    }
    match ext {
        Extension::Periodic => apply_periodic(model, phi, grid, path),
        Extension::Constant => {
            let (pg, padded) = pad_constant(grid, phi)?;
            let out = apply_periodic(model, &padded, &pg, path)?;
            Ok(unpad(grid, &out))
        }
    }
}

fn apply_periodic(model: &StableModel, phi: &[f64], grid: &GridSpec, path: LevyPath) -> Result<Vec<f64>> {
    match path {
        LevyPath::Spectral => {
            let sym = model.symbol_on_grid(grid);
            let sp = Spectral::new(*grid);
            let mut d = sp.forward(phi);
            for (v, s) in d.iter_mut().zip(sym.iter()) {
                *v *= Complex64::new(*s, 0.0);
            }
            Ok(sp.inverse(d))
        }
        LevyPath::Quadrature => Ok(levy_stencil(model, grid)?.apply(phi)),
    }
}

/// Embed in a grid of twice the extent, continuing with the nearest edge value.
pub(crate) fn pad_constant(grid: &GridSpec, phi: &[f64]) -> Result<(GridSpec, Vec<f64>)> {
    let n = grid.points_per_axis;
    let pg = GridSpec::new(grid.dim, 2.0 * grid.half_extent, 2 * n)?;
    let off = n / 2;
    let src = |i: usize| (i as i64 - off as i64).clamp(0, n as i64 - 1) as usize;
    let out = if grid.dim == 1 {
        (0..2 * n).map(|i| phi[src(i)]).collect()
    } else {
        let m = 2 * n;
        (0..m * m).map(|idx| phi[src(idx / m) * n + src(idx % m)]).collect()
    };
    Ok((pg, out))
}

pub(crate) fn unpad(grid: &GridSpec, padded: &[f64]) -> Vec<f64> {
    let n = grid.points_per_axis;
    let off = n / 2;
    if grid.dim == 1 {
        padded[off..off + n].to_vec()
    } else {
        let m = 2 * n;
        (0..n * n).map(|idx| padded[(idx / n + off) * m + idx % n + off]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cardinal_pieces_match_function() {
        for j in -3i64..=3 {
            for m in (j - 2)..=(j + 1) {
                let p = cardinal_piece(j, m);
                let u = m as f64 + 0.37;
                let v = p[0] + p[1] * u + p[2] * u * u + p[3] * u * u * u;
                assert!((v - crate::grid::cubic_cardinal(u - j as f64)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stencil_symbol_tracks_exact_symbol_1d() {
        let m = StableModel::isotropic(0.7, 1).unwrap();
        let g = GridSpec::new(1, 8.0 * PI, 1024).unwrap();
        let st = levy_stencil(&m, &g).unwrap();
        let sp = Spectral::new(g);
        // error decays like (λh)^{4-α}
        for (k, tol) in [(4usize, 2e-6), (8, 2e-5), (16, 1e-4), (32, 1e-3)] {
            let lam = sp.freq_vec(k);
            let exact = m.symbol_at(lam);
            let rel = (st.discrete_symbol()[k] - exact).abs() / exact.abs();
            assert!(rel < tol, "k={k} rel={rel}");
        }
    }

    #[test]
    fn constants_are_annihilated() {
        let m = StableModel::reference_smooth(0.6, 2).unwrap();
        let g = GridSpec::new(2, 4.0, 64).unwrap();
        let phi = vec![3.0; g.len()];
        for path in [LevyPath::Spectral, LevyPath::Quadrature] {
            for ext in [Extension::Periodic, Extension::Constant] {
                let out = levy_apply(&m, &phi, &g, ext, path).unwrap();
                assert!(out.iter().all(|v| v.abs() < 1e-10), "{path:?} {ext:?}");
            }
        }
    }
}
