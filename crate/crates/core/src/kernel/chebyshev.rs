//! Chebyshev–Lobatto interpolation on an interval and on a square, with derivatives.

use std::f64::consts::PI;

/// Lobatto nodes `cos(πj/n)`, `j = 0..=n`, mapped to `[-half, half]`.
pub fn nodes(n: usize, half: f64) -> Vec<f64> {
    (0..=n).map(|j| half * (PI * j as f64 / n as f64).cos()).collect()
}

/// Chebyshev coefficients from values at the Lobatto nodes.
pub fn coefficients(values: &[f64]) -> Vec<f64> {
    let n = values.len() - 1;
    let mut c = vec![0.0; n + 1];
    for (k, ck) in c.iter_mut().enumerate() {
        let mut s = 0.0;
        for (j, &v) in values.iter().enumerate() {
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            s += w * v * (PI * (j * k) as f64 / n as f64).cos();
        }
        *ck = s * 2.0 / n as f64;
    }
    c[0] *= 0.5;
    c[n] *= 0.5;
    c
}

/// `T_k(x), T_k'(x), T_k''(x)` for `k = 0..=n` at `x ∈ [-1, 1]`.
pub fn basis(n: usize, x: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut t = vec![0.0; n + 1];
    let mut d = vec![0.0; n + 1];
    let mut dd = vec![0.0; n + 1];
    t[0] = 1.0;
    if n >= 1 {
        t[1] = x;
        d[1] = 1.0;
    }
    for k in 1..n {
        t[k + 1] = 2.0 * x * t[k] - t[k - 1];
        d[k + 1] = 2.0 * t[k] + 2.0 * x * d[k] - d[k - 1];
        dd[k + 1] = 4.0 * d[k] + 2.0 * x * dd[k] - dd[k - 1];
    }
    (t, d, dd)
}

/// Values and first two derivatives of a 1-d Chebyshev series on `[-half, half]` at points `xs`.
pub fn eval_1d(c: &[f64], half: f64, xs: &[f64]) -> [Vec<f64>; 3] {
    let n = c.len() - 1;
    let mut out = [vec![0.0; xs.len()], vec![0.0; xs.len()], vec![0.0; xs.len()]];
    for (i, &x) in xs.iter().enumerate() {
        let (t, d, dd) = basis(n, (x / half).clamp(-1.0, 1.0));
        for k in 0..=n {
            out[0][i] += c[k] * t[k];
            out[1][i] += c[k] * d[k] / half;
            out[2][i] += c[k] * dd[k] / (half * half);
        }
    }
    out
}

/// Tensor coefficients `C[k1][k2]` from values `v[j1][j2]` at Lobatto nodes.
pub fn coefficients_2d(values: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let rows: Vec<Vec<f64>> = values.iter().map(|r| coefficients(r)).collect();
    let m = rows[0].len();
    let mut out = vec![vec![0.0; m]; rows.len()];
    for k2 in 0..m {
        let col: Vec<f64> = rows.iter().map(|r| r[k2]).collect();
        let cc = coefficients(&col);
        for k1 in 0..rows.len() {
            out[k1][k2] = cc[k1];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_smooth_function_and_derivatives() {
        let half = 3.0;
        let f = |x: f64| 1.0 / (x - 9.0).powi(2);
        let v: Vec<f64> = nodes(32, half).iter().map(|&x| f(x)).collect();
        let c = coefficients(&v);
        let [val, d1, d2] = eval_1d(&c, half, &[0.7, -2.9]);
        assert!((val[0] - f(0.7)).abs() < 1e-14);
        assert!((d1[1] - (-2.0 / (-2.9f64 - 9.0).powi(3))).abs() < 1e-12);
        assert!((d2[0] - 6.0 / (0.7f64 - 9.0).powi(4)).abs() < 1e-11);
    }
}
