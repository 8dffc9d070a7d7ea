//! Fixed-point solver for the full equation with freezing at the evaluation point.
//!
//! For a target `(t, x)` the frozen pair is `(τ, ξ) = (t, x)`, the cutoff `η` follows `θ_{s,t}(x)`,
//! and `v = uη` solves the frozen equation with source `fη + R + 𝒮` where
//! `𝒮 = ηL u − L(uη)`. Since `η(t, x) = 1`, `u(t, x) = v(t, x)` and the Duhamel formula for `v`
//! gives the next iterate (and, differentiated in `x`, its gradient).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::duhamel::GradedMesh;
use super::{sup, CutoffSpec, FreezingPair, FrozenPath, Profile, SpaceTimeField, Torus};
use crate::error::{invalid, LabError, Result};
use crate::flow::DriftField;
use crate::grid::GridSpec;
use crate::spectral_models::StableModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullOptions {
    /// Slices per time interval, end points included.
    pub slices: usize,
    pub mesh_nodes: usize,
    pub flow_step: f64,
    pub max_iter: usize,
    pub cutoff: CutoffSpec,
    /// Largest number of interval halvings.
    pub max_splits: usize,
}

impl Default for FullOptions {
    fn default() -> Self {
        FullOptions { slices: 9, mesh_nodes: 32, flow_step: 2e-3, max_iter: 30, cutoff: CutoffSpec::default(), max_splits: 5 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IntervalReport {
    pub start: f64,
    pub end: f64,
    pub iterations: usize,
    /// Sup-norm changes of `u` and `D_x u` per iteration.
    pub changes: Vec<f64>,
    pub grad_changes: Vec<f64>,
    pub contraction: Vec<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FullSolution {
    #[serde(skip)]
    pub field: SpaceTimeField,
    pub intervals: Vec<IntervalReport>,
}

/// Cubic Lagrange weights in time over the uniform slices.
fn time_weights(times: &[f64], s: f64) -> Vec<(usize, f64)> {
    let m = times.len();
    let dt = times[1] - times[0];
    let u = ((s - times[0]) / dt).clamp(0.0, (m - 1) as f64);
    if m < 4 {
        let k = (u.floor() as usize).min(m - 2);
        let r = u - k as f64;
        return vec![(k, 1.0 - r), (k + 1, r)];
    }
    let k0 = (u.floor() as i64 - 1).clamp(0, m as i64 - 4) as usize;
    (0..4)
        .map(|a| {
            let mut w = 1.0;
            for b in 0..4 {
                if a != b {
                    w *= (u - (k0 + b) as f64) / (a as f64 - b as f64);
                }
            }
            (k0 + a, w)
        })
        .collect()
}

fn blend(slices: &[Vec<f64>], w: &[(usize, f64)]) -> Vec<f64> {
    let mut out = vec![0.0; slices[0].len()];
    for &(k, c) in w {
        for (o, v) in out.iter_mut().zip(&slices[k]) {
            *o += c * v;
        }
    }
    out
}

struct Target {
    /// `(θ_{s_q}, frozen drift at s_q)` per mesh node, then the terminal center.
    centers: Vec<(f64, f64)>,
    end_center: f64,
}

struct Interval<'a> {
    torus: Torus,
    times: Vec<f64>,
    /// Mesh nodes `(s, w)` per slice.
    nodes: Vec<Vec<(f64, f64)>>,
    decay: Vec<Vec<Vec<f64>>>,
    end_decay: Vec<Vec<f64>>,
    drift_grid: Vec<Vec<Vec<f64>>>,
    targets: Vec<Vec<Target>>,
    fv: Vec<f64>,
    opts: &'a FullOptions,
}

impl<'a> Interval<'a> {
    fn new(
        model: &'a StableModel,
        drift: &'a DriftField,
        f: &[f64],
        grid: &GridSpec,
        a: f64,
        b: f64,
        opts: &'a FullOptions,
    ) -> Result<Self> {
        let torus = Torus::new(model, grid)?;
        let m = opts.slices;
        let times: Vec<f64> = (0..m).map(|i| a + (b - a) * i as f64 / (m - 1) as f64).collect();
        let mesh = GradedMesh::for_exponents(model.alpha, drift.beta, opts.mesh_nodes)?;
        let nodes: Vec<Vec<(f64, f64)>> = times.iter().map(|&t| if t < b { mesh.nodes_on(t, b) } else { vec![] }).collect();
        let decay = times
            .iter()
            .zip(&nodes)
            .map(|(&t, ns)| ns.iter().map(|&(s, _)| torus.decay(s - t)).collect())
            .collect();
        let end_decay = times.iter().map(|&t| torus.decay(b - t)).collect();
        let drift_grid = nodes
            .iter()
            .map(|ns| {
                ns.iter().map(|&(s, _)| (0..grid.len()).map(|i| drift.eval(s, grid.point(i))[0]).collect()).collect()
            })
            .collect();
        let n = grid.len();
        let targets = times
            .iter()
            .zip(&nodes)
            .map(|(&t, ns)| {
                (0..n)
                    .into_par_iter()
                    .map(|j| {
                        let pair = FreezingPair { tau: t, xi: [grid.coord(j), 0.0] };
                        let path = FrozenPath::new(drift, pair, t, b, opts.flow_step)?;
                        let centers = ns.iter().map(|&(s, _)| (path.theta(s)[0], path.drift(s)[0])).collect();
                        Ok(Target { centers, end_center: path.theta(b)[0] })
                    })
                    .collect::<Result<Vec<Target>>>()
            })
            .collect::<Result<_>>()?;
        Ok(Interval {
            torus,
            times,
            nodes,
            decay,
            end_decay,
            drift_grid,
            targets,
            fv: f.to_vec(),
            opts,
        })
    }

    /// First iterate: the unlocalized frozen Duhamel formula at every target.
    fn proxy(&self, gv: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let gh = self.torus.forward(gv);
        let fh = self.torus.forward(&self.fv);
        let last = self.times.len() - 1;
        let mut vals = Vec::new();
        let mut grads = Vec::new();
        for i in 0..self.times.len() {
            if i == last {
                vals.push(gv.to_vec());
                grads.push(self.torus.gradient(gv));
                continue;
            }
            let out: Vec<(f64, f64)> = self.targets[i]
                .par_iter()
                .map(|tg| {
                    let (mut v, mut dv) = self.torus.point_eval_1d(&gh, &self.end_decay[i], tg.end_center);
                    for (q, &(_, w)) in self.nodes[i].iter().enumerate() {
                        let (a, b) = self.torus.point_eval_1d(&fh, &self.decay[i][q], tg.centers[q].0);
                        v += w * a;
                        dv += w * b;
                    }
                    (v, dv)
                })
                .collect();
            vals.push(out.iter().map(|o| o.0).collect());
            grads.push(out.iter().map(|o| o.1).collect());
        }
        (vals, grads)
    }

    /// One Picard sweep from `(u, Du)`.
    fn sweep(&self, gv: &[f64], u: &[Vec<f64>], du: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let grid = self.torus.grid;
        let n = grid.len();
        let lu: Vec<Vec<f64>> = u.iter().map(|v| self.torus.generator(v)).collect();
        let last = self.times.len() - 1;
        let sym = &self.torus.sym;
        let cutoff = &self.opts.cutoff;
        let mut vals = Vec::new();
        let mut grads = Vec::new();
        for i in 0..self.times.len() {
            if i == last {
                vals.push(gv.to_vec());
                grads.push(self.torus.gradient(gv));
                continue;
            }
            // slices of u at this row's mesh nodes, shared by all targets of the row
            let rows: Vec<[Vec<f64>; 3]> = self.nodes[i]
                .iter()
                .map(|&(s, _)| {
                    let w = time_weights(&self.times, s);
                    [blend(u, &w), blend(du, &w), blend(&lu, &w)]
                })
                .collect();
            let out: Vec<Result<(f64, f64)>> = self.targets[i]
                .par_iter()
                .map(|tg| {
                    let eta_end = cutoff.on_grid(&grid, [tg.end_center, 0.0])?;
                    let ge: Vec<f64> = gv.iter().zip(&eta_end).map(|(a, e)| a * e).collect();
                    let (mut v, mut dv) = self.torus.point_eval_1d(&self.torus.forward(&ge), &self.end_decay[i], tg.end_center);
                    for (q, &(_, w)) in self.nodes[i].iter().enumerate() {
                        let (c, bq) = tg.centers[q];
                        let eta = cutoff.on_grid(&grid, [c, 0.0])?;
                        let [uq, duq, luq] = &rows[q];
                        let fq = &self.drift_grid[i][q];
                        // pack h1 = fη + R + ηLu (real part) and h2 = uη (imaginary part)
                        let z: Vec<Complex64> = (0..n)
                            .map(|k| {
                                let e = eta[k];
                                if e == 0.0 {
                                    return Complex64::new(0.0, 0.0);
                                }
                                let h1 = e * (self.fv[k] + (fq[k] - bq) * duq[k] + luq[k]);
                                Complex64::new(h1, e * uq[k])
                            })
                            .collect();
                        let zh = self.torus.sp.forward_complex(z);
                        let hat: Vec<Complex64> = (0..n)
                            .map(|k| {
                                let km = (n - k) % n;
                                let h1 = 0.5 * (zh[k] + zh[km].conj());
                                let h2 = Complex64::new(0.0, -0.5) * (zh[k] - zh[km].conj());
                                h1 - h2 * sym[k]
                            })
                            .collect();
                        let (a, b) = self.torus.point_eval_1d(&hat, &self.decay[i][q], c);
                        v += w * a;
                        dv += w * b;
                    }
                    if !(v.is_finite() && dv.is_finite()) {
                        return invalid(format!("non-finite iterate at t = {}", self.times[i]));
                    }
                    Ok((v, dv))
                })
                .collect();
            let out: Vec<(f64, f64)> = out.into_iter().collect::<Result<_>>()?;
            vals.push(out.iter().map(|o| o.0).collect());
            grads.push(out.iter().map(|o| o.1).collect());
        }
        Ok((vals, grads))
    }
}

fn max_change(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).fold(0.0, |m: f64, (p, q)| m.max((p - q).abs()))).fold(0.0, f64::max)
}

/// Picard iteration on `[a, b]`. `Ok(None)` when the contraction factor stays above ½.
#[allow(clippy::too_many_arguments)]
fn attempt(
    model: &StableModel,
    drift: &DriftField,
    fv: &[f64],
    gv: &[f64],
    grid: &GridSpec,
    a: f64,
    b: f64,
    tol: f64,
    opts: &FullOptions,
) -> Result<(Option<SpaceTimeField>, IntervalReport)> {
    let iv = Interval::new(model, drift, fv, grid, a, b, opts)?;
    let (mut u, mut du) = iv.proxy(gv);
    let mut rep = IntervalReport {
        start: a,
        end: b,
        iterations: 0,
        changes: vec![],
        grad_changes: vec![],
        contraction: vec![],
        converged: false,
    };
    let mut slow = 0;
    for it in 1..=opts.max_iter {
        let (nu, ndu) = iv.sweep(gv, &u, &du)?;
        let c = max_change(&nu, &u);
        let cg = max_change(&ndu, &du);
        let scale = 1.0 + sup(&nu.iter().flatten().cloned().collect::<Vec<_>>());
        if let Some(&prev) = rep.changes.last() {
            let k = if prev > 0.0 { c / prev } else { 0.0 };
            rep.contraction.push(k);
            slow = if k > 0.5 && c > tol { slow + 1 } else { 0 };
        }
        rep.changes.push(c);
        rep.grad_changes.push(cg);
        rep.iterations = it;
        u = nu;
        du = ndu;
        if c <= tol && cg <= tol * scale.max(1.0) * 10.0 {
            rep.converged = true;
            break;
        }
        if slow >= 2 {
            return Ok((None, rep));
        }
    }
    if !rep.converged {
        return Ok((None, rep));
    }
    Ok((
        Some(SpaceTimeField { grid: *grid, times: iv.times.clone(), values: u, grads: du, gradient_method: "freezing identity".into() }),
        rep,
    ))
}

#[allow(clippy::too_many_arguments)]
fn solve_on(
    model: &StableModel,
    drift: &DriftField,
    fv: &[f64],
    gv: &[f64],
    grid: &GridSpec,
    a: f64,
    b: f64,
    tol: f64,
    opts: &FullOptions,
    depth: usize,
    reports: &mut Vec<IntervalReport>,
) -> Result<SpaceTimeField> {
    let (field, rep) = attempt(model, drift, fv, gv, grid, a, b, tol, opts)?;
    if let Some(fd) = field {
        reports.push(rep);
        return Ok(fd);
    }
    if depth >= opts.max_splits {
        return Err(LabError::NoConvergence { iterations: rep.iterations, history: rep.contraction });
    }
    let mid = 0.5 * (a + b);
    let upper = solve_on(model, drift, fv, gv, grid, mid, b, tol, opts, depth + 1, reports)?;
    let lower = solve_on(model, drift, fv, &upper.values[0], grid, a, mid, tol, opts, depth + 1, reports)?;
    let keep = lower.times.len() - 1;
    let mut out = lower;
    out.times.truncate(keep);
    out.values.truncate(keep);
    out.grads.truncate(keep);
    out.times.extend(upper.times);
    out.values.extend(upper.values);
    out.grads.extend(upper.grads);
    Ok(out)
}

/// Solve `∂_t u + L_α u + F·D_x u = −f`, `u(T) = g` on `[0, T]` (one dimension), halving the
/// time interval until the Picard contraction factor stays below ½.
#[allow(clippy::too_many_arguments)]
pub fn solve_full(
    model: &StableModel,
    drift: &DriftField,
    f: &Profile,
    g: &Profile,
    grid: &GridSpec,
    horizon: f64,
    tol: f64,
    opts: &FullOptions,
) -> Result<FullSolution> {
    if grid.dim != 1 || drift.dim != 1 {
        return Err(LabError::Unsupported("the full solver is one-dimensional".into()));
    }
    if model.alpha + drift.beta <= 1.0 {
        return invalid(format!("alpha + beta = {} must exceed 1", model.alpha + drift.beta));
    }
    if !(horizon > 0.0 && tol > 0.0) || opts.slices < 2 {
        return invalid("horizon and tolerance must be positive, with at least two slices");
    }
    let fv = f.sample(grid)?;
    let gv = g.sample(grid)?;
    let mut reports = Vec::new();
    let field = solve_on(model, drift, &fv, &gv, grid, 0.0, horizon, tol, opts, 0, &mut reports)?;
    reports.sort_by(|x, y| x.start.partial_cmp(&y.start).unwrap());
    Ok(FullSolution { field, intervals: reports })
}
