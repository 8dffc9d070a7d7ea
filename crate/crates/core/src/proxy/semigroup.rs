//! The frozen semigroup `P̃_{s,t} φ(x) = ∫ p(s − t, y − m_{s,t}(x)) φ(y) dy` and its smoothing rates.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{FreezingPair, FrozenPath, Profile, Torus};
use crate::error::{invalid, LabError, Result};
use crate::flow::{DriftField, Point};
use crate::grid::GridSpec;
use crate::integrability::pbeta_admissible;
use crate::kernel::ALIAS_LIMIT;
use crate::special::ols;
use crate::spectral_models::StableModel;

/// How `φ` continues beyond the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailRule {
    Periodic,
    /// `φ` minus its secant line is continued periodically; the affine part is carried exactly
    /// (symmetric kernels map `a·y + c` to `a·m(x) + c`). One dimension only.
    Affine,
}

/// `P̃φ` with its gradient and Hessian (point-major).
#[derive(Clone, Debug, Serialize)]
pub struct Applied {
    pub values: Vec<f64>,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
    /// `m_{s,t}(x) − x`.
    pub shift: Point,
}

impl Applied {
    pub fn sup_grad(&self, dim: usize) -> f64 {
        self.grad.chunks(dim).map(|g| g.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }

    pub fn sup_hess(&self, dim: usize) -> f64 {
        self.hess.chunks(dim * dim).map(|g| g.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }
}

/// Apply the frozen semigroup on a periodic grid by the Fourier multiplier `exp((s−t)Ψ(λ) + i⟨λ, b⟩)`
/// with `b = m_{s,t}(x) − x`, which is the same for every `x`.
#[allow(clippy::too_many_arguments)]
pub fn frozen_semigroup_apply(
    model: &StableModel,
    f: &DriftField,
    pair: FreezingPair,
    t: f64,
    s: f64,
    phi: &[f64],
    grid: &GridSpec,
    rule: TailRule,
    flow_step: f64,
) -> Result<Applied> {
    if !(s > t) {
        return invalid(format!("need s > t, got s = {s}, t = {t}"));
    }
    if phi.len() != grid.len() || phi.iter().any(|v| !v.is_finite()) {
        return invalid("phi must be finite and match the grid");
    }
    if rule == TailRule::Affine && grid.dim != 1 {
        return Err(LabError::Unsupported("affine tail rule in dimension two".into()));
    }
    let torus = Torus::new(model, grid)?;
    let level = torus.nyquist_level(s - t);
    if level > ALIAS_LIMIT {
        return Err(LabError::Aliasing { value: level, limit: ALIAS_LIMIT });
    }
    let path = FrozenPath::new(f, pair, t, s, flow_step)?;
    let shift = path.shift(t, s);
    Ok(propagate(&torus, phi, s - t, shift, rule))
}

pub(crate) fn propagate(torus: &Torus, phi: &[f64], dt: f64, shift: Point, rule: TailRule) -> Applied {
    let grid = &torus.grid;
    let d = grid.dim;
    let (slope, base) = match rule {
        TailRule::Periodic => (0.0, phi.to_vec()),
        TailRule::Affine => {
            let n = grid.points_per_axis;
            let a = (phi[n - 1] - phi[0]) / (grid.coord(n - 1) - grid.coord(0));
            (a, phi.iter().enumerate().map(|(i, v)| v - a * grid.coord(i)).collect())
        }
    };
    let hat = torus.forward(&base);
    let mult = torus.propagator(dt, shift);
    let mut values = torus.apply(&hat, &mult, None);
    let mut grad = vec![0.0; phi.len() * d];
    let mut hess = vec![0.0; phi.len() * d * d];
    let lam = &torus.lam;
    for a in 0..d {
        let ga = torus.apply(&hat, &mult, Some(a));
        for (i, v) in ga.iter().enumerate() {
            grad[i * d + a] = *v;
        }
        for b in a..d {
            let m2: Vec<Complex64> = mult
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    if a != b && (torus.nyquist(i, a) || torus.nyquist(i, b)) {
                        Complex64::new(0.0, 0.0)
                    } else {
                        m * (-lam[i][a] * lam[i][b])
                    }
                })
                .collect();
            let hab = torus.apply(&hat, &m2, None);
            for (i, v) in hab.iter().enumerate() {
                hess[i * d * d + a * d + b] = *v;
                hess[i * d * d + b * d + a] = *v;
            }
        }
    }
    if slope != 0.0 {
        for (i, v) in values.iter_mut().enumerate() {
            *v += slope * (grid.coord(i) + shift[0]);
        }
        for g in grad.iter_mut() {
            *g += slope;
        }
    }
    Applied { values, grad, hess, shift }
}

/// Smallest power-of-two grid on `[-L, L)` that passes the aliasing guard at time `min_gap`.
pub fn smoothing_grid(model: &StableModel, half_extent: f64, min_gap: f64, max_points: usize) -> Result<GridSpec> {
    let mut n = 1024;
    loop {
        let g = GridSpec::new(model.dim, half_extent, n)?;
        let torus = Torus::new(model, &g)?;
        if torus.nyquist_level(min_gap) <= ALIAS_LIMIT {
            return Ok(g);
        }
        n *= 2;
        if n > max_points {
            return Err(LabError::GridRejected(format!("no grid up to {max_points} points resolves s − t = {min_gap}")));
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothingReport {
    pub beta: f64,
    pub gaps: Vec<f64>,
    pub sup_first: Vec<f64>,
    pub sup_second: Vec<f64>,
    pub slope_first: f64,
    pub slope_second: f64,
    pub theory_first: f64,
    pub theory_second: f64,
    pub pass_first: bool,
    pub pass_second: bool,
}

/// Log-log slopes of `‖D^ℓ P̃_{t+g,t} φ‖_∞` against the gap `g`, compared with `(β − ℓ)/α`
/// (tolerance 0.05 for `ℓ = 1`, 0.07 for `ℓ = 2`).
#[allow(clippy::too_many_arguments)]
pub fn smoothing_probe(
    model: &StableModel,
    f: &DriftField,
    pair: FreezingPair,
    beta: f64,
    gaps: &[f64],
    phi: &Profile,
    grid: &GridSpec,
    flow_step: f64,
) -> Result<SmoothingReport> {
    if !(beta > 0.0 && beta < 1.0) {
        return invalid(format!("beta = {beta} outside (0, 1)"));
    }
    pbeta_admissible(model, beta)?;
    if gaps.len() < 2 || gaps.windows(2).any(|w| !(w[1] > w[0])) || gaps[0] <= 0.0 {
        return invalid("gaps must be positive and increasing (at least two)");
    }
    let values = phi.sample(grid)?;
    let t = pair.tau;
    let mut first = Vec::new();
    let mut second = Vec::new();
    for &g in gaps {
        let out = frozen_semigroup_apply(model, f, pair, t, t + g, &values, grid, TailRule::Periodic, flow_step)?;
        first.push(out.sup_grad(grid.dim));
        second.push(out.sup_hess(grid.dim));
    }
    let lx: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let fit = |v: &[f64]| ols(&lx, &v.iter().map(|x| x.ln()).collect::<Vec<_>>()).0;
    let (s1, s2) = (fit(&first), fit(&second));
    let a = model.alpha;
    let (e1, e2) = ((beta - 1.0) / a, (beta - 2.0) / a);
    let ok = first.iter().chain(&second).all(|v| v.is_finite() && *v > 0.0);
    Ok(SmoothingReport {
        beta,
        gaps: gaps.to_vec(),
        sup_first: first,
        sup_second: second,
        slope_first: s1,
        slope_second: s2,
        theory_first: e1,
        theory_second: e2,
        pass_first: ok && (s1 - e1).abs() <= 0.05,
        pass_second: ok && (s2 - e2).abs() <= 0.07,
    })
}
