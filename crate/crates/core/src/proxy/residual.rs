//! Residual of the integral identity `u(t) = u(s) + ∫_t^s [f + (L + b·D) u]`.

use serde::Serialize;

use super::{sup, FrozenPath, Profile, SpaceTimeField, Torus};
use crate::error::{invalid, Result};
use crate::flow::DriftField;
use crate::special::simpson_nonuniform;
use crate::spectral_models::StableModel;

/// The first-order term of the operator being checked.
#[derive(Clone, Copy, Debug)]
pub enum DriftTerm<'a> {
    None,
    Field(&'a DriftField),
    /// `F(t, θ_{t,τ}(ξ))`, the drift of the frozen equation.
    Frozen(&'a FrozenPath),
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    /// Sup residual divided by `‖f‖_∞ + ‖g‖_∞`.
    pub sup: f64,
    /// Root-mean-square residual, same normalization.
    pub l2: f64,
    pub normalizer: f64,
    pub windows: usize,
}

/// Residual over two-step windows `[t_i, t_{i+2}]` and the full window, with Simpson in time.
/// `eps > 0` adds `εΔ^{1/2}` to the operator.
pub fn residual_check(
    u: &SpaceTimeField,
    model: &StableModel,
    drift: DriftTerm,
    eps: f64,
    f: &Profile,
    g: &Profile,
) -> Result<ResidualReport> {
    let m = u.slices();
    if m < 3 {
        return invalid("residual check needs at least three slices");
    }
    let grid = &u.grid;
    let d = grid.dim;
    let torus = Torus::new(model, grid)?;
    let fv = f.sample(grid)?;
    let gv = g.sample(grid)?;
    let rhs: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            let t = u.times[k];
            let mut hat = torus.forward(&u.values[k]);
            for (i, h) in hat.iter_mut().enumerate() {
                let l = torus.lam[i];
                *h *= torus.sym[i] - eps * (l[0] * l[0] + l[1] * l[1]).sqrt();
            }
            let lu = torus.sp.inverse(hat);
            let du = &u.grads[k];
            (0..grid.len())
                .map(|i| {
                    let b = match drift {
                        DriftTerm::None => [0.0; 2],
                        DriftTerm::Field(fd) => fd.eval(t, grid.point(i)),
                        DriftTerm::Frozen(p) => p.drift(t),
                    };
                    let adv: f64 = (0..d).map(|a| b[a] * du[i * d + a]).sum();
                    fv[i] + lu[i] + adv
                })
                .collect()
        })
        .collect();
    let mut windows: Vec<(usize, usize)> = (0..m - 2).map(|i| (i, i + 2)).collect();
    windows.push((0, m - 1));
    let mut worst: f64 = 0.0;
    let mut sq = 0.0;
    let mut count = 0usize;
    for &(i, j) in &windows {
        let ts = &u.times[i..=j];
        for x in 0..grid.len() {
            let ys: Vec<f64> = (i..=j).map(|k| rhs[k][x]).collect();
            let r = u.values[i][x] - u.values[j][x] - simpson_nonuniform(ts, &ys);
            worst = worst.max(r.abs());
            sq += r * r;
            count += 1;
        }
    }
    let normalizer = (sup(&fv) + sup(&gv)).max(f64::MIN_POSITIVE);
    Ok(ResidualReport {
        sup: worst / normalizer,
        l2: (sq / count as f64).sqrt() / normalizer,
        normalizer,
        windows: windows.len(),
    })
}
