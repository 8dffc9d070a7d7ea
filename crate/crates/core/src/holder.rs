//! Grid Hölder seminorms, empirical Schauder ratios and the fractional-operator Hölder bound.
//!
//! Every seminorm here is a sup over sampled pairs, hence a lower bound of the true one.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::grid::{GridSpec, Spectral};
use crate::proxy::{Profile, SpaceTimeField};
use crate::spectral_models::{levy_apply, Extension, LevyPath, StableModel};

/// Pairs are local: `|x − x'| ≤ 1`.
pub const LOCAL_SEPARATION: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolderReport {
    pub gamma: f64,
    pub seminorm: f64,
    pub sup_norm: f64,
    pub pair_count: usize,
    pub max_pair_separation: f64,
}

fn pair_ratio(values: &[f64], comps: usize, i: usize, j: usize, dist: f64, gamma: f64) -> f64 {
    let mut s = 0.0;
    for c in 0..comps {
        let d = values[i * comps + c] - values[j * comps + c];
        s += d * d;
    }
    s.sqrt() / dist.powf(gamma)
}

/// `[ψ]_γ` over axis pairs at separations `h, 2h, 4h, … ≤ 1` and `pair_budget` random pairs.
pub fn holder_seminorm(values: &[f64], grid: &GridSpec, gamma: f64, pair_budget: usize, seed: u64) -> Result<HolderReport> {
    holder_seminorm_within(values, 1, grid, gamma, pair_budget, seed, LOCAL_SEPARATION)
}

/// As [`holder_seminorm`] for a field with `comps` components per point (point-major, Euclidean
/// norm of differences) and separations up to `max_separation` (`f64::INFINITY` for global pairs).
pub fn holder_seminorm_within(
    values: &[f64],
    comps: usize,
    grid: &GridSpec,
    gamma: f64,
    pair_budget: usize,
    seed: u64,
    max_separation: f64,
) -> Result<HolderReport> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return invalid(format!("gamma = {gamma} outside (0, 1]"));
    }
    if comps == 0 || values.len() != grid.len() * comps || values.iter().any(|v| !v.is_finite()) {
        return invalid("field must be finite and match the grid");
    }
    let h = grid.spacing();
    if h >= 1.0 || h >= max_separation {
        return Err(LabError::GridRejected(format!("spacing {h} must be below the pair cap")));
    }
    let n = grid.points_per_axis;
    let d = grid.dim;
    let cap_steps = ((max_separation / h).floor() as usize).min(n - 1);
    let mut steps = Vec::new();
    let mut k = 1;
    while k <= cap_steps {
        steps.push(k);
        k *= 2;
    }
    let axis_pairs = |k: usize, axis: usize| -> (f64, usize) {
        let dist = k as f64 * h;
        let count = if d == 1 { n - k } else { (n - k) * n };
        let best = (0..count)
            .into_par_iter()
            .map(|p| {
                let (i, j) = if d == 1 {
                    (p, p + k)
                } else {
                    let (a, b) = (p / n, p % n);
                    if axis == 0 {
                        (a * n + b, (a + k) * n + b)
                    } else {
                        (b * n + a, b * n + a + k)
                    }
                };
                pair_ratio(values, comps, i, j, dist, gamma)
            })
            .reduce(|| 0.0, f64::max);
        (best, count)
    };
    let mut best: f64 = 0.0;
    let mut pairs = 0;
    let mut widest: f64 = 0.0;
    for &k in &steps {
        for axis in 0..d {
            let (b, c) = axis_pairs(k, axis);
            best = best.max(b);
            pairs += c;
        }
        widest = widest.max(k as f64 * h);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..pair_budget {
        let i: Vec<usize> = (0..d).map(|_| rng.random_range(0..n)).collect();
        let off: Vec<i64> = (0..d).map(|_| rng.random_range(-(cap_steps as i64)..=cap_steps as i64)).collect();
        let j: Vec<i64> = i.iter().zip(&off).map(|(a, o)| *a as i64 + o).collect();
        if j.iter().any(|v| *v < 0 || *v >= n as i64) || off.iter().all(|o| *o == 0) {
            continue;
        }
        let dist = off.iter().map(|o| (*o as f64 * h).powi(2)).sum::<f64>().sqrt();
        if dist > max_separation {
            continue;
        }
        let flat = |v: &[usize]| if d == 1 { v[0] } else { v[0] * n + v[1] };
        let jj: Vec<usize> = j.iter().map(|v| *v as usize).collect();
        best = best.max(pair_ratio(values, comps, flat(&i), flat(&jj), dist, gamma));
        pairs += 1;
        widest = widest.max(dist);
    }
    let sup_norm = values.chunks(comps).map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
    Ok(HolderReport { gamma, seminorm: best, sup_norm, pair_count: pairs, max_pair_separation: widest })
}

const PAIRS: usize = 20_000;
const SEED: u64 = 0x5eed;

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn euclid_sup(v: &[f64], comps: usize) -> f64 {
    v.chunks(comps).map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max)
}

/// `‖ψ‖_∞ + ‖Dψ‖_∞ + [Dψ]_{γ−1}` for `γ ∈ (1, 2)`, given `ψ` and its point-major gradient.
pub fn c1_gamma_norm(values: &[f64], grad: &[f64], grid: &GridSpec, gamma: f64) -> Result<f64> {
    if !(gamma > 1.0 && gamma < 2.0) {
        return invalid(format!("order {gamma} outside (1, 2)"));
    }
    let rep = holder_seminorm_within(grad, grid.dim, grid, gamma - 1.0, PAIRS, SEED, LOCAL_SEPARATION)?;
    Ok(sup(values) + euclid_sup(grad, grid.dim) + rep.seminorm)
}

/// `‖ψ‖_∞ + [ψ]_γ` for `γ ∈ (0, 1]`.
pub fn c_gamma_norm(values: &[f64], grid: &GridSpec, gamma: f64) -> Result<f64> {
    let rep = holder_seminorm(values, grid, gamma, PAIRS, SEED)?;
    Ok(rep.sup_norm + rep.seminorm)
}

fn spectral_gradient(grid: &GridSpec, v: &[f64]) -> Vec<f64> {
    let sp = Spectral::new(*grid);
    let d = grid.dim;
    let mut g = vec![0.0; v.len() * d];
    for a in 0..d {
        for (i, x) in sp.derivative(v, a).into_iter().enumerate() {
            g[i * d + a] = x;
        }
    }
    g
}

#[derive(Clone, Debug, Serialize)]
pub struct SchauderReport {
    pub u_norm: f64,
    pub g_norm: f64,
    pub f_norm: f64,
    pub ratio: f64,
    /// Time of the slice attaining `u_norm`.
    pub worst_time: f64,
}

/// `‖u‖_{L^∞(C^{α+β})} / (‖g‖_{C^{α+β}} + ‖f‖_{C^β})`, with gradients of `g` taken spectrally.
pub fn schauder_ratio(u: &SpaceTimeField, f: &Profile, g: &Profile, alpha: f64, beta: f64) -> Result<SchauderReport> {
    let order = alpha + beta;
    if !(order > 1.0 && order < 2.0) {
        return invalid(format!("alpha + beta = {order} must lie in (1, 2)"));
    }
    let grid = &u.grid;
    let norms: Vec<f64> = u
        .values
        .iter()
        .zip(&u.grads)
        .map(|(v, dv)| c1_gamma_norm(v, dv, grid, order))
        .collect::<Result<_>>()?;
    let (k, u_norm) = norms.iter().enumerate().fold((0, 0.0), |b, (i, v)| if *v > b.1 { (i, *v) } else { b });
    let gv = g.sample(grid)?;
    let g_norm = c1_gamma_norm(&gv, &spectral_gradient(grid, &gv), grid, order)?;
    let f_norm = c_gamma_norm(&f.sample(grid)?, grid, beta)?;
    let denom = g_norm + f_norm;
    if !(denom > 0.0) || !u_norm.is_finite() {
        return invalid("data norms vanish or the solution is not finite");
    }
    Ok(SchauderReport { u_norm, g_norm, f_norm, ratio: u_norm / denom, worst_time: u.times[k] })
}

/// A non-local operator of order `θ`: a stable generator or the multiplier `−|λ|^θ`, `θ ∈ (0, 1]`.
#[derive(Clone, Debug)]
pub enum FracOperator {
    Model(StableModel),
    Theta(f64),
}

impl FracOperator {
    pub fn order(&self) -> f64 {
        match self {
            FracOperator::Model(m) => m.alpha,
            FracOperator::Theta(t) => *t,
        }
    }

    pub fn apply(&self, phi: &[f64], grid: &GridSpec) -> Result<Vec<f64>> {
        match self {
            FracOperator::Model(m) => levy_apply(m, phi, grid, Extension::Periodic, LevyPath::Spectral),
            FracOperator::Theta(t) => {
                let sp = Spectral::new(*grid);
                let mut hat = sp.forward(phi);
                for (i, h) in hat.iter_mut().enumerate() {
                    let l = sp.freq_vec(i);
                    *h *= Complex64::new(-(l[0] * l[0] + l[1] * l[1]).sqrt().powf(*t), 0.0);
                }
                Ok(sp.inverse(hat))
            }
        }
    }
}

/// `(sin²x + δ_j²)^{p/2}` with `δ_j = 0.3·2^{−j/2}`, `j < count`: smoothed `|sin|^p`, uniformly in `C^p`.
pub fn smoothed_sine_family(power: f64, count: usize) -> Vec<Profile> {
    (0..count)
        .map(|j| Profile::SmoothedAbsSin { power, frequency: 1.0, delta: 0.3 * 2f64.powf(-(j as f64) / 2.0) })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FracOpReport {
    pub theta: f64,
    pub gamma: f64,
    /// `‖L_θ φ‖_{C^γ} / ‖φ‖_{C^{γ+θ}}` per family member on the given grid and on its refinement.
    pub ratios: Vec<f64>,
    pub ratios_refined: Vec<f64>,
    pub max_ratio: f64,
    pub max_ratio_refined: f64,
    /// `|max_refined − max| / max`.
    pub refinement_delta: f64,
    pub pass: bool,
}

fn frac_ratio(op: &FracOperator, phi: &Profile, grid: &GridSpec, gamma: f64) -> Result<f64> {
    let theta = op.order();
    let v = phi.sample(grid)?;
    let lv = op.apply(&v, grid)?;
    let top = c_gamma_norm(&lv, grid, gamma)?;
    let order = gamma + theta;
    let bottom = if order > 1.0 {
        c1_gamma_norm(&v, &spectral_gradient(grid, &v), grid, order)?
    } else {
        c_gamma_norm(&v, grid, order)?
    };
    if !(bottom > 0.0) {
        return invalid("test function has zero norm");
    }
    Ok(top / bottom)
}

/// Max of `‖L_θ φ‖_{C^γ} / ‖φ‖_{C^{γ+θ}}` over the family on `grid` and on `grid.refined()`;
/// passes when both are finite and agree within 15%.
pub fn frac_op_holder_check(op: &FracOperator, family: &[Profile], gamma: f64, grid: &GridSpec) -> Result<FracOpReport> {
    let theta = op.order();
    if !(theta > 0.0 && theta <= 1.0) || !(gamma > 0.0 && gamma < 1.0) || theta + gamma <= 1.0 || theta + gamma >= 2.0 {
        return invalid(format!("need theta in (0, 1], gamma in (0, 1), 1 < theta + gamma < 2; got {theta}, {gamma}"));
    }
    if family.is_empty() {
        return invalid("empty test family");
    }
    let fine = grid.refined();
    let ratios: Vec<f64> = family.iter().map(|p| frac_ratio(op, p, grid, gamma)).collect::<Result<_>>()?;
    let ratios_refined: Vec<f64> = family.iter().map(|p| frac_ratio(op, p, &fine, gamma)).collect::<Result<_>>()?;
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let max_ratio_refined = ratios_refined.iter().cloned().fold(0.0, f64::max);
    let refinement_delta = (max_ratio_refined - max_ratio).abs() / max_ratio.max(f64::MIN_POSITIVE);
    let pass = max_ratio.is_finite() && max_ratio_refined.is_finite() && refinement_delta <= 0.15;
    Ok(FracOpReport { theta, gamma, ratios, ratios_refined, max_ratio, max_ratio_refined, refinement_delta, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_function_is_extremal_at_origin() {
        let g = GridSpec::new(1, 4.0, 4096).unwrap();
        for gamma in [0.3, 0.6, 0.9] {
            let v: Vec<f64> = g.axis().iter().map(|x| x.abs().powf(gamma)).collect();
            let r = holder_seminorm(&v, &g, gamma, 1000, 1).unwrap();
            assert!((r.seminorm - 1.0).abs() <= 0.02, "{r:?}");
            assert!(r.max_pair_separation <= 1.0);
        }
    }

    #[test]
    fn constants_and_sine() {
        let g = GridSpec::new(1, 4.0, 4096).unwrap();
        let c = vec![2.5; g.len()];
        assert_eq!(holder_seminorm(&c, &g, 0.5, 100, 1).unwrap().seminorm, 0.0);
        let s: Vec<f64> = g.axis().iter().map(|x| x.sin()).collect();
        let r = holder_seminorm(&s, &g, 1.0, 100, 1).unwrap();
        assert!(r.seminorm <= 1.0 + 1e-12 && r.seminorm >= 0.98, "{r:?}");
    }

    #[test]
    fn coarse_grids_are_rejected() {
        let g = GridSpec::new(1, 64.0, 64).unwrap();
        assert!(holder_seminorm(&vec![0.0; 64], &g, 0.5, 10, 1).is_err());
    }

    #[test]
    fn cosine_is_an_eigenfunction() {
        let g = GridSpec::new(1, std::f64::consts::PI, 1024).unwrap();
        let r = frac_ratio(&FracOperator::Theta(0.7), &Profile::Cos { amplitude: 1.0, frequency: 1.0 }, &g, 0.5).unwrap();
        assert!(r <= 1.0 + 1e-9 && r > 0.0);
        let zero = frac_ratio(&FracOperator::Theta(0.7), &Profile::Constant { value: 2.0 }, &g, 0.5).unwrap();
        assert!(zero < 1e-12);
    }
}
