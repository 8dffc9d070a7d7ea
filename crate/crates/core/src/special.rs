//! Special functions and quadrature rules shared by the numerical modules.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

pub use statrs::function::erf::{erf, erfc};
pub use statrs::function::gamma::{gamma, ln_gamma};

/// Reciprocal gamma function, valid for every real argument (zero at the poles).
pub fn recip_gamma(x: f64) -> f64 {
    if x > 0.0 {
        return 1.0 / gamma(x);
    }
    if x == x.floor() {
        return 0.0;
    }
    // reflection: 1/Γ(x) = Γ(1-x) sin(πx) / π
    gamma(1.0 - x) * (PI * x).sin() / PI
}

/// `∫_0^∞ (1 - cos r) r^{-1-α} dr = Γ(1-α) cos(πα/2) / α` for α in (0, 2).
pub fn stable_radial_constant(alpha: f64) -> f64 {
    PI / (2.0 * gamma(1.0 + alpha) * (PI * alpha / 2.0).sin())
}

/// Hurwitz zeta `ζ(s, a) = Σ_{k≥0} (k + a)^{-s}` for `s > 1`, `a > 0` (Euler–Maclaurin).
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s > 1.0 && a > 0.0, "hurwitz_zeta needs s > 1, a > 0");
    const B2J: [f64; 7] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
    ];
    let n = 12usize.max(s.ceil() as usize);
    let mut sum = 0.0;
    for k in 0..n {
        sum += (a + k as f64).powf(-s);
    }
    let b = a + n as f64;
    let bs = b.powf(-s);
    sum += b * bs / (s - 1.0) + 0.5 * bs;
    // Σ B_{2j}/(2j)! · s(s+1)…(s+2j-2) · b^{-s-2j+1}
    let mut rising = s;
    let mut fact = 2.0;
    let mut pow = bs / b;
    for (j, &bern) in B2J.iter().enumerate() {
        let term = bern / fact * rising * pow;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        let jj = (j + 1) as f64;
        rising *= (s + 2.0 * jj - 1.0) * (s + 2.0 * jj);
        fact *= (2.0 * jj + 1.0) * (2.0 * jj + 2.0);
        pow /= b * b;
    }
    sum
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (cached per order).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&n) {
        return r.clone();
    }
    let r = gauss_legendre_uncached(n);
    cache.lock().unwrap().insert(n, r.clone());
    r
}

fn gauss_legendre_uncached(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            } else {
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
            }
            // p1 = P_n(z), p0 = P_{n-1}(z)
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        if n == 1 {
            x[0] = 0.0;
            w[0] = 2.0;
            return (x, w);
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter()
        .zip(&w)
        .map(|(&xi, &wi)| (mid + half * xi, half * wi))
        .collect()
}

/// Fourier coefficients `γ_k` of `|cos x|^α = Σ_k γ_k e^{2ikx}` for `k = 0..=kmax` (`γ_{-k} = γ_k`).
pub fn cos_power_coeffs(alpha: f64, kmax: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(kmax + 1);
    let h = alpha / 2.0;
    g.push(gamma(alpha + 1.0) / (2f64.powf(alpha) * gamma(h + 1.0).powi(2)));
    for k in 1..=kmax {
        let kf = k as f64;
        let prev = g[k - 1];
        g.push(prev * (h - kf + 1.0) / (h + kf));
    }
    g
}

/// Composite Simpson weights for `n` equispaced samples (trapezoid fallback on the last panel when `n` is even).
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    if n == 1 {
        return w;
    }
    if n == 2 {
        w[0] = 0.5 * h;
        w[1] = 0.5 * h;
        return w;
    }
    let m = if n % 2 == 1 { n } else { n - 1 };
    for i in 0..m {
        w[i] += h / 3.0
            * if i == 0 || i == m - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
    }
    if m < n {
        w[n - 2] += 0.5 * h;
        w[n - 1] += 0.5 * h;
    }
    w
}

/// Composite Simpson on a non-uniform increasing grid (piecewise quadratic through triples).
pub fn simpson_nonuniform(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    assert_eq!(n, y.len());
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * (x[1] - x[0]) * (y[0] + y[1]);
    }
    let mut s = 0.0;
    let mut i = 0;
    while i + 2 < n {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        let hs = h0 + h1;
        s += hs / 6.0
            * (y[i] * (2.0 - h1 / h0) + y[i + 1] * hs * hs / (h0 * h1) + y[i + 2] * (2.0 - h0 / h1));
        i += 2;
    }
    if i + 1 < n {
        // last odd panel: quadratic through the final three points, integrated over the last interval
        let (x0, x1, x2) = (x[n - 3], x[n - 2], x[n - 1]);
        let (y0, y1, y2) = (y[n - 3], y[n - 2], y[n - 1]);
        let h = x2 - x1;
        let d01 = x1 - x0;
        let d02 = x2 - x0;
        // Lagrange basis integrated over [x1, x2]
        let i0 = -h * h * h / (6.0 * d01 * d02);
        let i1 = h * (3.0 * d01 + h) / (6.0 * d01) ;
        let i2 = h * (3.0 * d01 + 2.0 * h) / (6.0 * d02);
        s += i0 * y0 + i1 * y1 + i2 * y2;
    }
    s
}

/// Ordinary least-squares slope and intercept of `y` against `x`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
