//! The cutoff remainder of the localized frozen equation.

use serde::Serialize;

use super::{CutoffSpec, FreezingPair, FrozenPath, SpaceTimeField, Torus};
use crate::error::{invalid, Result};
use crate::flow::{DriftField, Point};
use crate::spectral_models::{levy_stencil, LevyPath, StableModel};

#[derive(Clone, Debug, Serialize)]
pub struct Remainder {
    /// `[F(t,x) − F(t,θ_{t,τ}(ξ))]·D_x u(t,x) η(t,x)`.
    pub r: Vec<f64>,
    /// `−u L_α η − Γ(u, η)`.
    pub s: Vec<f64>,
    pub eta: Vec<f64>,
    pub center: Point,
}

/// `R` and `𝒮` at slice time `t` of `u`, for the cutoff transported along `θ_{·,τ}(ξ)`.
#[allow(clippy::too_many_arguments)]
pub fn remainder_eval(
    model: &StableModel,
    drift: &DriftField,
    pair: FreezingPair,
    u: &SpaceTimeField,
    cutoff: &CutoffSpec,
    t: f64,
    path_kind: LevyPath,
    flow_step: f64,
) -> Result<Remainder> {
    let Some(k) = u.times.iter().position(|s| (s - t).abs() <= 1e-12) else {
        return invalid(format!("u has no slice (and gradient data) at t = {t}"));
    };
    let grid = &u.grid;
    let d = grid.dim;
    let path = FrozenPath::new(drift, pair, t.min(pair.tau), t.max(pair.tau), flow_step)?;
    let center = path.theta(t);
    let b = path.drift(t);
    let eta = cutoff.on_grid(grid, center)?;
    let uv = &u.values[k];
    let du = &u.grads[k];
    let r: Vec<f64> = (0..grid.len())
        .map(|i| {
            if eta[i] == 0.0 {
                return 0.0;
            }
            let fx = drift.eval(t, grid.point(i));
            (0..d).map(|a| (fx[a] - b[a]) * du[i * d + a]).sum::<f64>() * eta[i]
        })
        .collect();
    let s = match path_kind {
        LevyPath::Spectral => {
            let torus = Torus::new(model, grid)?;
            let lu = torus.generator(uv);
            let prod: Vec<f64> = uv.iter().zip(&eta).map(|(a, e)| a * e).collect();
            let lp = torus.generator(&prod);
            (0..grid.len()).map(|i| eta[i] * lu[i] - lp[i]).collect()
        }
        LevyPath::Quadrature => {
            let st = levy_stencil(model, grid)?;
            let le = st.apply(&eta);
            let gam = st.carre_du_champ(uv, &eta);
            (0..grid.len()).map(|i| -uv[i] * le[i] - gam[i]).collect()
        }
    };
    Ok(Remainder { r, s, eta, center })
}
