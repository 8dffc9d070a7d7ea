//! Periodic image sums of angular power laws `Ω(θ)|z|^{-s}` on a square lattice in the plane.

use std::f64::consts::PI;

use crate::special::gauss_legendre_on;

/// `f(z) = Ω(θ_z) |z|^{-s}` with `s > 2`, together with `Ω''`.
pub struct AngularPower<'a> {
    pub omega: &'a (dyn Fn(f64) -> f64 + Sync),
    pub omega_dd: &'a (dyn Fn(f64) -> f64 + Sync),
    pub s: f64,
}

impl AngularPower<'_> {
    pub fn eval(&self, z: [f64; 2]) -> f64 {
        let r2 = z[0] * z[0] + z[1] * z[1];
        (self.omega)(z[1].atan2(z[0])) * r2.powf(-0.5 * self.s)
    }
}

/// Distance from the origin to the boundary of the square centered at `c` with half-side `half`,
/// along direction `theta` (the origin must lie inside the square).
pub fn box_exit_radius(c: [f64; 2], half: f64, theta: f64) -> f64 {
    let d = [theta.cos(), theta.sin()];
    let mut r = f64::INFINITY;
    for a in 0..2 {
        if d[a] > 1e-300 {
            r = r.min((c[a] + half) / d[a]);
        } else if d[a] < -1e-300 {
            r = r.min((c[a] - half) / d[a]);
        }
    }
    r
}

/// Integrate `g(θ, R(θ))` over the circle, splitting at the corner directions of the square.
pub fn integrate_outside_box(c: [f64; 2], half: f64, g: impl Fn(f64, f64) -> f64) -> f64 {
    let mut cuts: Vec<f64> = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
        .iter()
        .map(|&(sx, sy)| {
            let a = (c[1] + sy * half).atan2(c[0] + sx * half);
            if a < 0.0 { a + 2.0 * PI } else { a }
        })
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.push(cuts[0] + 2.0 * PI);
    let mut s = 0.0;
    for w in cuts.windows(2) {
        for (th, wt) in gauss_legendre_on(24, w[0], w[1]) {
            s += wt * g(th, box_exit_radius(c, half, th));
        }
    }
    s
}

/// `Σ_{k ∈ Z², k ≠ 0} f(x + P k)`: direct sum for `|k|_∞ ≤ kmax`, continuum remainder with
/// the second-order midpoint correction beyond.
pub fn image_sum_2d(f: &AngularPower, x: [f64; 2], period: f64, kmax: i64) -> f64 {
    let mut s = 0.0;
    for a in -kmax..=kmax {
        for b in -kmax..=kmax {
            if a == 0 && b == 0 {
                continue;
            }
            s += f.eval([x[0] + period * a as f64, x[1] + period * b as f64]);
        }
    }
    let half = (kmax as f64 + 0.5) * period;
    let p = f.s;
    let cont = integrate_outside_box(x, half, |th, r| {
        let om = (f.omega)(th);
        om * r.powf(2.0 - p) / (p - 2.0) / (period * period)
            - (p * p * om + (f.omega_dd)(th)) * r.powf(-p) / p / 24.0
    });
    s + cont
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_sum_matches_brute_force() {
        let om = |t: f64| 1.0 + 0.3 * (2.0 * t).cos();
        let omdd = |t: f64| -1.2 * (2.0 * t).cos();
        let f = AngularPower { omega: &om, omega_dd: &omdd, s: 2.7 };
        let x = [0.3, -0.45];
        let fast = image_sum_2d(&f, x, 2.0, 4);
        let mut brute = 0.0;
        let k = 1500i64;
        for a in -k..=k {
            for b in -k..=k {
                if a != 0 || b != 0 {
                    brute += f.eval([x[0] + 2.0 * a as f64, x[1] + 2.0 * b as f64]);
                }
            }
        }
        brute += image_sum_tail_estimate(&f, 2.0, k);
        assert!((fast - brute).abs() < 3e-5 * brute, "{fast} {brute}");
    }

    fn image_sum_tail_estimate(f: &AngularPower, p: f64, k: i64) -> f64 {
        integrate_outside_box([0.0, 0.0], (k as f64 + 0.5) * p, |th, r| {
            (f.omega)(th) * r.powf(2.0 - f.s) / (f.s - 2.0) / (p * p)
        })
    }

    #[test]
    fn exit_radius_of_centered_square() {
        assert!((box_exit_radius([0.0, 0.0], 1.0, PI / 4.0) - 2f64.sqrt()).abs() < 1e-14);
        assert!((box_exit_radius([0.5, 0.0], 1.0, PI) - 0.5).abs() < 1e-14);
    }
}
