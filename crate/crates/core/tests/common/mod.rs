//! Independent quadrature oracles for stable densities.
#![allow(dead_code)]

use std::f64::consts::PI;

use schauder_core::special::gauss_legendre_on;
use schauder_core::spectral_models::StableModel;

/// Nodes for `∫_0^∞ g(λ) e^{-c λ^α} dλ`: geometric panels near zero, uniform panels beyond.
pub fn frequency_nodes(alpha: f64, c: f64, width: f64) -> Vec<(f64, f64)> {
    let top = (45.0 / c).powf(1.0 / alpha);
    let mut edges = vec![0.0];
    let mut e = 1e-8;
    while e < 1.0 {
        let last = *edges.last().unwrap();
        let pieces = ((e - last) / width).ceil().max(1.0) as usize;
        for k in 1..=pieces {
            edges.push(last + (e - last) * k as f64 / pieces as f64);
        }
        e *= 2.0;
    }
    let mut x = 1.0;
    while x < top {
        edges.push(x);
        x += width;
    }
    edges.push(top.max(1.0) + width);
    edges
        .windows(2)
        .flat_map(|w| gauss_legendre_on(20, w[0], w[1]))
        .collect()
}

/// `[p, p', p'']` of the 1-d density with symbol `-c|λ|^α` at `x`.
pub fn fourier_1d(alpha: f64, c: f64, x: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (l, w) in frequency_nodes(alpha, c, 0.25f64.min(3.0 / x.abs())) {
        let e = w * (-c * l.powf(alpha)).exp();
        let (s, co) = (l * x).sin_cos();
        out[0] += e * co;
        out[1] -= e * l * s;
        out[2] -= e * l * l * co;
    }
    out.map(|v| v / PI)
}

fn bessel(n: usize, z: f64) -> f64 {
    let m = (1.5 * z.abs()) as usize + 64;
    let h = PI / m as f64;
    let mut s = 0.0;
    for k in 0..=m {
        let th = k as f64 * h;
        let w = if k == 0 || k == m { 0.5 } else { 1.0 };
        s += w * (n as f64 * th - z * th.sin()).cos();
    }
    s * h / PI
}

/// `[p, p_r, p_rr]` of the planar isotropic density with symbol `-c|λ|^α` at radius `r > 0`.
pub fn hankel_2d(alpha: f64, c: f64, r: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (l, w) in frequency_nodes(alpha, c, 0.5f64.min(3.0 / r)) {
        let e = w * (-c * l.powf(alpha)).exp() * l;
        let z = l * r;
        let j0 = bessel(0, z);
        let j1 = bessel(1, z);
        out[0] += e * j0;
        out[1] -= e * l * j1;
        let j1p = if z > 1e-12 { j0 - j1 / z } else { 0.5 };
        out[2] -= e * l * l * j1p;
    }
    out.map(|v| v / (2.0 * PI))
}

/// `[p, ∂₁p, ∂₂p]` of a planar symmetric model at time `t` by polar Fourier quadrature.
pub fn polar_2d(model: &StableModel, t: f64, x: [f64; 2], angles: usize) -> [f64; 3] {
    let mut out = [0.0; 3];
    for j in 0..angles {
        let th = PI * j as f64 / angles as f64;
        let e = [th.cos(), th.sin()];
        let c = -t * model.symbol_at(e);
        let proj = x[0] * e[0] + x[1] * e[1];
        for (l, w) in frequency_nodes(model.alpha, c, 0.5f64.min(3.0 / proj.abs())) {
            let v = w * (-c * l.powf(model.alpha)).exp() * l;
            let (s, co) = (l * proj).sin_cos();
            out[0] += v * co;
            out[1] -= v * l * s * e[0];
            out[2] -= v * l * s * e[1];
        }
    }
    // half circle doubled, trapezoid weight π/angles, prefactor 1/(4π²)
    out.map(|v| v * 2.0 * PI / angles as f64 / (4.0 * PI * PI))
}

/// `[p, p', p'']` of the 1-d density from its convergent far-field series, for `x > 0` well away from the origin.
pub fn far_series_1d(alpha: f64, c: f64, x: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    let mut fact = 1.0;
    for n in 1..60 {
        let nf = n as f64;
        fact *= nf;
        let s = 1.0 + nf * alpha;
        let a = if n % 2 == 1 { 1.0 } else { -1.0 } * schauder_core::special::gamma(s) * (nf * PI * alpha / 2.0).sin()
            * c.powi(n)
            / fact
            / PI;
        out[0] += a * x.powf(-s);
        out[1] -= a * s * x.powf(-s - 1.0);
        out[2] += a * s * (s + 1.0) * x.powf(-s - 2.0);
    }
    out
}

/// CDF of a 1-d density field: trapezoidal values at the nodes, linear in between, half the tail on each side.
pub fn grid_cdf(f: &schauder_core::kernel::DensityField) -> impl Fn(f64) -> f64 + '_ {
    let g = f.grid;
    let h = g.spacing();
    let mut nodal = Vec::with_capacity(f.p.len());
    let mut acc = 0.5 * f.tail_mass_estimate;
    for i in 0..f.p.len() {
        let prev = if i == 0 { 0.0 } else { f.p[i - 1] };
        acc += 0.5 * h * (prev + f.p[i]);
        nodal.push(acc);
    }
    let half_tail = 0.5 * f.tail_mass_estimate;
    let alpha = f.model.alpha;
    move |x: f64| {
        // beyond the grid: leading power tail matched to the tail estimate at ±L
        if x <= -g.half_extent {
            return half_tail * (g.half_extent / -x).powf(alpha);
        }
        if x >= g.half_extent - h {
            return 1.0 - half_tail * (g.half_extent / x).powf(alpha);
        }
        let u = (x + g.half_extent) / h;
        let i = u.floor() as usize;
        let fr = u - i as f64;
        nodal[i] + fr * (nodal[i + 1] - nodal[i])
    }
}
