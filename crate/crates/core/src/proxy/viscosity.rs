//! Vanishing-viscosity reference solver: Strang splitting of `L_α + εΔ^{1/2}` (exact in Fourier)
//! and semi-Lagrangian transport along the drift, with trigonometric interpolation at the feet.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Profile, SpaceTimeField, Torus};
use crate::error::{invalid, LabError, Result};
use crate::flow::{trajectory, DriftField};
use crate::grid::GridSpec;
use crate::spectral_models::StableModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViscosityOptions {
    pub time_step: f64,
    /// RK4 substeps per time step when tracing characteristics.
    #[serde(default = "default_substeps")]
    pub flow_substeps: usize,
}

fn default_substeps() -> usize {
    2
}

impl Default for ViscosityOptions {
    fn default() -> Self {
        ViscosityOptions { time_step: 1e-3, flow_substeps: 2 }
    }
}

/// Periodic Dirichlet kernel of the trigonometric interpolant (Nyquist mode as a cosine).
fn dirichlet(u: f64, n: usize, half: f64) -> f64 {
    let th = PI * u / half;
    let m = (n / 2) as f64;
    let s = (0.5 * th).sin();
    let core = if s.abs() < 1e-13 { 2.0 * m - 1.0 } else { ((m - 0.5) * th).sin() / s };
    (core + (m * th).cos()) / n as f64
}

/// Row-major `N × N` interpolation matrix from grid values to the feet of the characteristics.
fn transport_matrix(drift: &DriftField, grid: &GridSpec, t: f64, dt: f64, h: f64) -> Result<Vec<f64>> {
    let n = grid.points_per_axis;
    let mut w = vec![0.0; n * n];
    for j in 0..n {
        let x = grid.coord(j);
        let foot = trajectory(drift, t, [x, 0.0], t + dt, h)?.end()[0];
        for k in 0..n {
            w[j * n + k] = dirichlet(foot - grid.coord(k), n, grid.half_extent);
        }
    }
    Ok(w)
}

fn matvec(w: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|j| w[j * n..(j + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Backward solve of `∂_t u + L_α u + εΔ^{1/2}u + F·D_x u = −f`, `u(T) = g` (one dimension).
/// Every time step is kept as a slice.
#[allow(clippy::too_many_arguments)]
pub fn solve_viscosity(
    model: &StableModel,
    drift: &DriftField,
    f: &Profile,
    g: &Profile,
    grid: &GridSpec,
    horizon: f64,
    eps: f64,
    opts: &ViscosityOptions,
) -> Result<SpaceTimeField> {
    if grid.dim != 1 || drift.dim != 1 {
        return Err(LabError::Unsupported("the viscosity solver is one-dimensional".into()));
    }
    if !(eps > 0.0) {
        return invalid(format!("eps = {eps} must be positive"));
    }
    if !(horizon > 0.0) || !(opts.time_step > 0.0) || opts.flow_substeps == 0 {
        return invalid("horizon, time step and substeps must be positive");
    }
    let steps = (horizon / opts.time_step).ceil() as usize;
    let dt = horizon / steps as f64;
    let fmax = (0..grid.len())
        .map(|i| drift.eval(0.0, grid.point(i))[0].abs().max(drift.eval(horizon, grid.point(i))[0].abs()))
        .fold(0.0, f64::max);
    if dt * fmax > grid.half_extent / 4.0 {
        return invalid(format!(
            "CFL guard: dt·sup|F| = {:.3e} exceeds half extent / 4 = {:.3e}",
            dt * fmax,
            grid.half_extent / 4.0
        ));
    }
    let torus = Torus::new(model, grid)?;
    let half: Vec<f64> = torus
        .sym
        .iter()
        .zip(&torus.lam)
        .map(|(s, l)| (0.5 * dt * (s - eps * l[0].abs())).exp())
        .collect();
    let diffuse = |v: &[f64]| -> Vec<f64> {
        let mut hat = torus.forward(v);
        for (h, m) in hat.iter_mut().zip(&half) {
            *h *= *m;
        }
        torus.sp.inverse(hat)
    };
    let fv = f.sample(grid)?;
    let h = dt / opts.flow_substeps as f64;
    let fixed = if drift.is_autonomous() { Some(transport_matrix(drift, grid, 0.0, dt, h)?) } else { None };
    let mut u = g.sample(grid)?;
    let mut values = vec![u.clone()];
    let mut times = vec![horizon];
    for k in (0..steps).rev() {
        let t = k as f64 * dt;
        let mut v: Vec<f64> = u.iter().zip(&fv).map(|(a, b)| a + 0.5 * dt * b).collect();
        v = diffuse(&v);
        v = match &fixed {
            Some(w) => matvec(w, &v),
            None => matvec(&transport_matrix(drift, grid, t, dt, h)?, &v),
        };
        v = diffuse(&v);
        u = v.iter().zip(&fv).map(|(a, b)| a + 0.5 * dt * b).collect();
        if u.iter().any(|x| !x.is_finite()) {
            return invalid(format!("viscosity solver produced non-finite values at t = {t}"));
        }
        values.push(u.clone());
        times.push(t);
    }
    values.reverse();
    times.reverse();
    let grads = values.iter().map(|v| torus.gradient(v)).collect();
    Ok(SpaceTimeField { grid: *grid, times, values, grads, gradient_method: "spectral".into() })
}

/// Richardson extrapolation to `ε = 0` over a decreasing ladder.
#[derive(Clone, Debug, Serialize)]
pub struct Extrapolation {
    pub eps: Vec<f64>,
    /// Extrapolation from the two smallest viscosities.
    #[serde(skip)]
    pub field: SpaceTimeField,
    /// Sup-norm change between consecutive extrapolations.
    pub successive_change: Vec<f64>,
    /// Sup-norm gap between the two smallest-ε solutions.
    pub last_gap: f64,
}

fn combine(a: &SpaceTimeField, ea: f64, b: &SpaceTimeField, eb: f64) -> SpaceTimeField {
    // linear in ε: u0 = (ea·ub − eb·ua)/(ea − eb)
    let (ca, cb) = (-eb / (ea - eb), ea / (ea - eb));
    let mix = |x: &Vec<Vec<f64>>, y: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        x.iter().zip(y).map(|(p, q)| p.iter().zip(q).map(|(u, v)| ca * u + cb * v).collect()).collect()
    };
    SpaceTimeField {
        grid: a.grid,
        times: a.times.clone(),
        values: mix(&a.values, &b.values),
        grads: mix(&a.grads, &b.grads),
        gradient_method: a.gradient_method.clone(),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn viscosity_extrapolate(
    model: &StableModel,
    drift: &DriftField,
    f: &Profile,
    g: &Profile,
    grid: &GridSpec,
    horizon: f64,
    eps_ladder: &[f64],
    opts: &ViscosityOptions,
) -> Result<Extrapolation> {
    if eps_ladder.len() < 2 || eps_ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return invalid("eps ladder must be decreasing with at least two levels");
    }
    let sols: Vec<SpaceTimeField> = eps_ladder
        .iter()
        .map(|&e| solve_viscosity(model, drift, f, g, grid, horizon, e, opts))
        .collect::<Result<_>>()?;
    let extr: Vec<SpaceTimeField> =
        (1..sols.len()).map(|k| combine(&sols[k - 1], eps_ladder[k - 1], &sols[k], eps_ladder[k])).collect();
    let mut successive_change = Vec::new();
    for k in 1..extr.len() {
        successive_change.push(extr[k].sup_gap(&extr[k - 1])?);
    }
    let m = sols.len();
    let last_gap = sols[m - 1].sup_gap(&sols[m - 2])?;
    Ok(Extrapolation { eps: eps_ladder.to_vec(), field: extr.last().unwrap().clone(), successive_change, last_gap })
}

