//! Far-field expansions of stable densities: periodic image removal and mass outside the grid.
//!
//! For `α < 1` the densities have convergent expansions in powers of `|x|^{-α}`:
//! in one dimension `p(t,x) = Σ_n a_n |x|^{-1-nα}`, in the plane `p(t,x) = Σ_n Ω_n(φ) r^{-2-nα}`.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::chebyshev;
use crate::grid::{interp1_periodic, GridSpec};
use crate::spectral_models::{integrate_outside_box, StableModel};
use crate::special::{hurwitz_zeta, ln_gamma, recip_gamma};

/// Chebyshev degree used for the image sums.
pub const CHEB_DEGREE: usize = 32;
const ANGLES: usize = 256;

/// `p(t, x) = Σ (coef, s) |x|^{-s}` for the 1-d density with symbol `-τ|λ|^α/t` at time `t`.
pub fn series_1d(alpha: f64, tau: f64, rmin: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut first = 0.0;
    for n in 1..400 {
        let nf = n as f64;
        let s = nf * alpha + 1.0;
        let mag = (ln_gamma(nf * alpha + 1.0) - ln_gamma(nf + 1.0) + nf * tau.ln()).exp() / PI;
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        let coef = sign * mag * (nf * PI * alpha / 2.0).sin();
        let size = mag * rmin.powf(-s);
        if n == 1 {
            first = size;
        }
        out.push((coef, s));
        if n > 2 && size < 1e-18 * first {
            break;
        }
    }
    out
}

/// `Σ_{k≠0} p(x + 2Lk)` for the 1-d series.
pub fn image_sum_1d(series: &[(f64, f64)], half: f64, x: f64) -> f64 {
    let p = 2.0 * half;
    let u = x / p;
    series
        .iter()
        .map(|&(c, s)| c * p.powf(-s) * (hurwitz_zeta(s, 1.0 + u) + hurwitz_zeta(s, 1.0 - u)))
        .sum()
}

/// Mass of the 1-d series outside `[-L, L]`.
pub fn tail_1d(series: &[(f64, f64)], half: f64) -> f64 {
    series.iter().map(|&(c, s)| 2.0 * c * half.powf(1.0 - s) / (s - 1.0)).sum()
}

/// Image sums of a 1-d density and its two derivatives on the grid axis.
pub fn images_on_axis(series: &[(f64, f64)], grid: &GridSpec) -> [Vec<f64>; 3] {
    let half = grid.half_extent;
    let vals: Vec<f64> = chebyshev::nodes(CHEB_DEGREE, half)
        .iter()
        .map(|&x| image_sum_1d(series, half, x))
        .collect();
    let c = chebyshev::coefficients(&vals);
    chebyshev::eval_1d(&c, half, &grid.axis())
}

/// One term `Ω_n(φ) r^{-s_n}` of the planar expansion, stored as cosine/sine modes in `φ`.
#[derive(Clone, Debug)]
pub struct AngularTerm {
    pub s: f64,
    pub modes: Vec<(usize, f64, f64)>,
}

impl AngularTerm {
    pub fn omega(&self, phi: f64) -> f64 {
        self.modes
            .iter()
            .map(|&(m, a, b)| if m == 0 { a } else { a * (m as f64 * phi).cos() + b * (m as f64 * phi).sin() })
            .sum()
    }

    pub fn omega_dd(&self, phi: f64) -> f64 {
        self.modes
            .iter()
            .map(|&(m, a, b)| {
                let mf = m as f64;
                -mf * mf * (a * (mf * phi).cos() + b * (mf * phi).sin())
            })
            .sum()
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let r2 = x[0] * x[0] + x[1] * x[1];
        self.omega(x[1].atan2(x[0])) * r2.powf(-0.5 * self.s)
    }
}

/// Planar expansion of the time-`t` density of a model with directional factor `Φ`.
pub fn series_2d(model: &StableModel, t: f64, rmin: f64) -> Vec<AngularTerm> {
    let alpha = model.alpha;
    let phis: Vec<f64> = (0..ANGLES)
        .map(|j| model.directional_factor(2.0 * PI * j as f64 / ANGLES as f64))
        .collect();
    let mut out: Vec<AngularTerm> = Vec::new();
    let mut first = 0.0;
    let mut pw = vec![1.0; ANGLES];
    for n in 1..200 {
        let nf = n as f64;
        for (v, f) in pw.iter_mut().zip(&phis) {
            *v *= f;
        }
        let pref = (if n % 2 == 0 { 1.0 } else { -1.0 })
            * (nf * t.ln() - ln_gamma(nf + 1.0)).exp()
            * 2f64.powf(nf * alpha + 1.0)
            / (2.0 * PI);
        let mut modes = Vec::new();
        let mut size = 0.0;
        for m in (0..ANGLES / 2).step_by(2) {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, &v) in pw.iter().enumerate() {
                let th = 2.0 * PI * (j * m) as f64 / ANGLES as f64;
                re += v * th.cos();
                im -= v * th.sin();
            }
            re /= ANGLES as f64;
            im /= ANGLES as f64;
            let mf = m as f64;
            let g = (ln_gamma((mf + nf * alpha + 2.0) / 2.0)).exp() * recip_gamma((mf - nf * alpha) / 2.0);
            let sgn = if (m / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let (a, b) = if m == 0 {
                (pref * re * g, 0.0)
            } else {
                // 2 Re(a_m e^{imφ}) = 2 re cos mφ − 2 im sin mφ
                (2.0 * pref * sgn * g * re, -2.0 * pref * sgn * g * im)
            };
            size += a.abs() + b.abs();
            modes.push((m, a, b));
        }
        let cutoff = 1e-17 * size;
        modes.retain(|&(_, a, b)| a.abs() + b.abs() > cutoff);
        if modes.is_empty() {
            modes.push((0, 0.0, 0.0));
        }
        let s = 2.0 + nf * alpha;
        let mag = size * rmin.powf(-s);
        if n == 1 {
            first = mag;
        }
        out.push(AngularTerm { s, modes });
        if n > 2 && mag < 1e-17 * first {
            break;
        }
    }
    out
}

const TABLE: usize = 4096;

/// `Ω` and `Ω''` of one term sampled on a periodic angle grid.
struct TabulatedTerm {
    s: f64,
    om: Vec<f64>,
    omdd: Vec<f64>,
}

fn angle_grid() -> GridSpec {
    GridSpec::new(1, PI, TABLE).expect("fixed angle grid")
}

fn tabulate(series: &[AngularTerm]) -> Vec<TabulatedTerm> {
    let g = angle_grid();
    let axis = g.axis();
    series
        .par_iter()
        .map(|term| TabulatedTerm {
            s: term.s,
            om: axis.iter().map(|&p| term.omega(p)).collect(),
            omdd: axis.iter().map(|&p| term.omega_dd(p)).collect(),
        })
        .collect()
}

fn planar_images(table: &[TabulatedTerm], half: f64, x: [f64; 2]) -> f64 {
    let g = angle_grid();
    let period = 2.0 * half;
    let kmax = 4i64;
    let mut s = 0.0;
    for a in -kmax..=kmax {
        for b in -kmax..=kmax {
            if a == 0 && b == 0 {
                continue;
            }
            let y = [x[0] + period * a as f64, x[1] + period * b as f64];
            let lr = 0.5 * (y[0] * y[0] + y[1] * y[1]).ln();
            let phi = y[1].atan2(y[0]);
            s += table
                .iter()
                .map(|term| interp1_periodic(&g, &term.om, phi) * (-term.s * lr).exp())
                .sum::<f64>();
        }
    }
    // continuum beyond the direct block, with the second-order midpoint correction
    let outer = (kmax as f64 + 0.5) * period;
    s + integrate_outside_box(x, outer, |th, r| {
        let lr = r.ln();
        table
            .iter()
            .map(|term| {
                let p = term.s;
                let om = interp1_periodic(&g, &term.om, th);
                let dd = interp1_periodic(&g, &term.omdd, th);
                let rp = (-p * lr).exp();
                om * rp * r * r / (p - 2.0) / (period * period) - (p * p * om + dd) * rp / p / 24.0
            })
            .sum()
    })
}

/// Mass of the planar expansion outside the square `[-L, L]^2`.
pub fn tail_2d(series: &[AngularTerm], half: f64) -> f64 {
    series
        .iter()
        .map(|term| {
            integrate_outside_box([0.0, 0.0], half, |th, r| {
                term.omega(th) * r.powf(2.0 - term.s) / (term.s - 2.0)
            })
        })
        .sum()
}

/// Planar image sums and their derivatives on the full grid:
/// `[value, ∂₁, ∂₂, ∂₁₁, ∂₁₂, ∂₂₂]`, flat row-major.
pub fn images_on_plane(series: &[AngularTerm], grid: &GridSpec) -> [Vec<f64>; 6] {
    let half = grid.half_extent;
    let nd = chebyshev::nodes(CHEB_DEGREE, half);
    let table = tabulate(series);
    let vals: Vec<Vec<f64>> = nd
        .par_iter()
        .map(|&a| nd.iter().map(|&b| planar_images(&table, half, [a, b])).collect())
        .collect();
    let c = chebyshev::coefficients_2d(&vals);
    let n = grid.points_per_axis;
    let m = CHEB_DEGREE + 1;
    let axis = grid.axis();
    let bases: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = axis
        .iter()
        .map(|&x| {
            let (t, d, dd) = chebyshev::basis(CHEB_DEGREE, (x / half).clamp(-1.0, 1.0));
            (t, d.iter().map(|v| v / half).collect(), dd.iter().map(|v| v / (half * half)).collect())
        })
        .collect();
    // contract the second axis: D_q[k1][j] for q = value, first, second derivative
    let contract = |q: usize| -> Vec<Vec<f64>> {
        (0..m)
            .map(|k1| {
                (0..n)
                    .map(|j| {
                        let b = match q {
                            0 => &bases[j].0,
                            1 => &bases[j].1,
                            _ => &bases[j].2,
                        };
                        (0..m).map(|k2| c[k1][k2] * b[k2]).sum()
                    })
                    .collect()
            })
            .collect()
    };
    let d0 = contract(0);
    let d1 = contract(1);
    let d2 = contract(2);
    let combine = |dq: &Vec<Vec<f64>>, qa: usize| -> Vec<f64> {
        (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                let a = match qa {
                    0 => &bases[i].0,
                    1 => &bases[i].1,
                    _ => &bases[i].2,
                };
                (0..m).map(|k1| a[k1] * dq[k1][j]).sum()
            })
            .collect()
    };
    [
        combine(&d0, 0),
        combine(&d0, 1),
        combine(&d1, 0),
        combine(&d0, 2),
        combine(&d1, 1),
        combine(&d2, 0),
    ]
}

/// Least-squares fit `v ≈ c|y|^{slope}` of positive `values` on the outer 10% shell of the grid.
/// `None` when the shell sits at round-off level relative to the peak.
pub fn shell_power_fit(values: &[f64], grid: &GridSpec) -> Option<(f64, f64)> {
    let half = grid.half_extent;
    let peak = values.iter().cloned().fold(0.0, f64::max);
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    let mut shell_max: f64 = 0.0;
    for (idx, &v) in values.iter().enumerate() {
        let x = grid.point(idx);
        let r = if grid.dim == 1 { x[0].abs() } else { x[0].abs().max(x[1].abs()) };
        if r >= 0.9 * half {
            shell_max = shell_max.max(v.abs());
            if v > 0.0 {
                lx.push((x[0] * x[0] + x[1] * x[1]).sqrt().ln());
                ly.push(v.ln());
            }
        }
    }
    if lx.len() < 3 || shell_max < 1e-12 * peak {
        return None;
    }
    let (slope, lc) = crate::special::ols(&lx, &ly);
    Some((lc.exp(), slope))
}

/// `∫_{outside [-L,L]^d} |y|^γ c|y|^{slope} dy`; infinite when the integrand is not integrable.
pub fn power_tail_outside(c: f64, slope: f64, gamma: f64, grid: &GridSpec) -> f64 {
    let d = grid.dim as f64;
    let e = slope + gamma + d;
    if e >= 0.0 {
        return f64::INFINITY;
    }
    let half = grid.half_extent;
    if grid.dim == 1 {
        2.0 * c * half.powf(e) / -e
    } else {
        integrate_outside_box([0.0, 0.0], half, |_, r| c * r.powf(e) / -e)
    }
}

/// Mass outside the grid from a power-law fit of `p` on the outer shell; returns `(tail, fitted slope)`.
pub fn shell_tail_fit(p: &[f64], grid: &GridSpec) -> (f64, f64) {
    match shell_power_fit(p, grid) {
        None => (0.0, f64::NAN),
        Some((c, slope)) => (power_tail_outside(c, slope, 0.0, grid), slope),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dim_series_matches_isotropic_planar_limit() {
        // n = 1 coefficient equals the Lévy constant α 2^{α-1} Γ((1+α)/2) / (√π Γ(1-α/2))
        let a = 0.6;
        let s = series_1d(a, 1.0, 10.0);
        let levy = a * 2f64.powf(a - 1.0) * crate::special::gamma((1.0 + a) / 2.0)
            / (PI.sqrt() * crate::special::gamma(1.0 - a / 2.0));
        assert!((s[0].0 - levy).abs() < 1e-13);
        let m = StableModel::isotropic(a, 2).unwrap();
        let p = series_2d(&m, 1.0, 10.0);
        let levy2 = a * 2f64.powf(a - 1.0) * crate::special::gamma((2.0 + a) / 2.0)
            / (PI * crate::special::gamma(1.0 - a / 2.0));
        assert!((p[0].omega(0.3) - levy2).abs() < 1e-9, "{} {levy2}", p[0].omega(0.3));
    }
}
