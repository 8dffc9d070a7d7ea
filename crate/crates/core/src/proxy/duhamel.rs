//! Duhamel representation of the frozen equation with a graded time quadrature.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{FreezingPair, FrozenPath, Profile, SpaceTimeField, Torus};
use crate::error::{invalid, Result};
use crate::flow::DriftField;
use crate::grid::GridSpec;
use crate::special::gauss_legendre_on;
use crate::spectral_models::StableModel;

/// Gauss–Legendre nodes in `σ ∈ [0, 1]` mapped by `s − t = (T − t) σ^p`.
///
/// With `p = α/(α+β−1)` the gradient singularity `(s−t)^{(β−1)/α}` becomes bounded in `σ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradedMesh {
    pub nodes: usize,
    pub exponent: f64,
}

impl GradedMesh {
    pub fn new(nodes: usize, exponent: f64) -> Result<Self> {
        if nodes < 4 {
            return invalid(format!("graded mesh needs at least 4 nodes, got {nodes}"));
        }
        if !(exponent > 1.0 && exponent.is_finite()) {
            return invalid(format!("mesh exponent {exponent} does not refine near s = t"));
        }
        Ok(GradedMesh { nodes, exponent })
    }

    pub fn for_exponents(alpha: f64, beta: f64, nodes: usize) -> Result<Self> {
        if alpha + beta <= 1.0 {
            return invalid(format!("alpha + beta = {} must exceed 1", alpha + beta));
        }
        Self::new(nodes, (alpha / (alpha + beta - 1.0)).max(1.25))
    }

    /// `(s_q, w_q)` with `Σ w_q h(s_q) ≈ ∫_t^T h(s) ds`.
    pub fn nodes_on(&self, t: f64, end: f64) -> Vec<(f64, f64)> {
        let p = self.exponent;
        let span = end - t;
        gauss_legendre_on(self.nodes, 0.0, 1.0)
            .into_iter()
            .map(|(sig, w)| (t + span * sig.powf(p), w * span * p * sig.powf(p - 1.0)))
            .collect()
    }
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    if times.len() < 2 || times.windows(2).any(|w| !(w[1] > w[0])) || times[0] < 0.0 {
        return invalid("time grid must be non-negative, increasing, with at least two slices");
    }
    Ok(())
}

/// `ũ(t,x) = P̃_{T,t} g(x) + ∫_t^T P̃_{s,t} f(x) ds` on every slice of `times` (`T` = last slice).
#[allow(clippy::too_many_arguments)]
pub fn duhamel_proxy(
    model: &StableModel,
    drift: &DriftField,
    pair: FreezingPair,
    f: &Profile,
    g: &Profile,
    grid: &GridSpec,
    times: &[f64],
    mesh: &GradedMesh,
    flow_step: f64,
) -> Result<SpaceTimeField> {
    check_times(times)?;
    if model.alpha + drift.beta <= 1.0 {
        return invalid(format!("alpha + beta = {} must exceed 1", model.alpha + drift.beta));
    }
    if drift.dim != grid.dim {
        return invalid("drift and grid dimensions differ");
    }
    let torus = Torus::new(model, grid)?;
    let end = *times.last().unwrap();
    let path = FrozenPath::new(drift, pair, times[0], end, flow_step)?;
    let fv = f.sample(grid)?;
    let gv = g.sample(grid)?;
    let fh = torus.forward(&fv);
    let gh = torus.forward(&gv);
    let d = grid.dim;
    let mut values = Vec::with_capacity(times.len());
    let mut grads = Vec::with_capacity(times.len());
    let one = vec![Complex64::new(1.0, 0.0); fh.len()];
    for &t in times {
        let acc = if t >= end {
            gh.clone()
        } else {
            let mut acc: Vec<Complex64> =
                gh.iter().zip(torus.propagator(end - t, path.shift(t, end))).map(|(a, m)| a * m).collect();
            for (s, w) in mesh.nodes_on(t, end) {
                let m = torus.propagator(s - t, path.shift(t, s));
                for ((a, fk), mk) in acc.iter_mut().zip(&fh).zip(&m) {
                    *a += w * fk * mk;
                }
            }
            acc
        };
        let v = if t >= end { gv.clone() } else { torus.apply(&acc, &one, None) };
        let mut gr = vec![0.0; grid.len() * d];
        for a in 0..d {
            for (i, x) in torus.apply(&acc, &one, Some(a)).iter().enumerate() {
                gr[i * d + a] = *x;
            }
        }
        values.push(v);
        grads.push(gr);
    }
    Ok(SpaceTimeField {
        grid: *grid,
        times: times.to_vec(),
        values,
        grads,
        gradient_method: "spectral".into(),
    })
}
