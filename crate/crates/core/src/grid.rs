//! Uniform periodic grids on `[-L, L)^d`, FFT plumbing and cubic interpolation.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// A uniform grid on `[-L, L)^d` with `N` points per axis; `x_i = -L + i h`, `h = 2L/N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub half_extent: f64,
    pub points_per_axis: usize,
}

impl GridSpec {
    pub fn new(dim: usize, half_extent: f64, points_per_axis: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(LabError::GridRejected(format!("dimension {dim} not in {{1,2}}")));
        }
        if !(half_extent.is_finite() && half_extent > 0.0) {
            return Err(LabError::GridRejected(format!("half extent {half_extent} must be positive")));
        }
        if points_per_axis < 64 || !points_per_axis.is_power_of_two() {
            return Err(LabError::GridRejected(format!(
                "points per axis {points_per_axis} must be a power of two >= 64"
            )));
        }
        Ok(Self { dim, half_extent, points_per_axis })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_extent / self.points_per_axis as f64
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of index `i` along one axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_extent + i as f64 * self.spacing()
    }

    pub fn axis(&self) -> Vec<f64> {
        (0..self.points_per_axis).map(|i| self.coord(i)).collect()
    }

    /// Point of flat index `idx` (row-major, first axis slowest).
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let n = self.points_per_axis;
        if self.dim == 1 {
            [self.coord(idx), 0.0]
        } else {
            [self.coord(idx / n), self.coord(idx % n)]
        }
    }

    /// Flat index of the mirror point `-x` on the periodic grid.
    pub fn mirror(&self, idx: usize) -> usize {
        let n = self.points_per_axis;
        let m = |i: usize| (n - i) % n;
        if self.dim == 1 {
            m(idx)
        } else {
            m(idx / n) * n + m(idx % n)
        }
    }

    /// Angular frequency of DFT index `k` (`πk/L`, with `k ≥ N/2` wrapped to negative).
    pub fn freq(&self, k: usize) -> f64 {
        let n = self.points_per_axis as i64;
        let kk = if (k as i64) < n / 2 { k as i64 } else { k as i64 - n };
        PI * kk as f64 / self.half_extent
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.spacing()
    }

    /// Index of the coordinate origin along one axis.
    pub fn origin_index(&self) -> usize {
        self.points_per_axis / 2
    }

    /// Refined grid with the same extent and twice the points per axis.
    pub fn refined(&self) -> Self {
        Self { points_per_axis: self.points_per_axis * 2, ..*self }
    }

    /// Trapezoidal (periodic) cell volume `h^d`.
    pub fn cell(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }
}

/// FFT plans for a grid; transforms are unnormalized forward and `1/N^d`-normalized inverse.
#[derive(Clone)]
pub struct Spectral {
    pub grid: GridSpec,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Spectral {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(grid.points_per_axis);
        let inv = planner.plan_fft_inverse(grid.points_per_axis);
        Self { grid, fwd, inv }
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.points_per_axis;
        if self.grid.dim == 1 {
            plan.process(data);
            return;
        }
        for row in data.chunks_mut(n) {
            plan.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = data[i * n + j];
            }
            plan.process(&mut col);
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
    }

    pub fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        let mut d: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut d, &self.fwd);
        d
    }

    pub fn forward_complex(&self, mut d: Vec<Complex64>) -> Vec<Complex64> {
        self.transform(&mut d, &self.fwd);
        d
    }

    pub fn inverse_complex(&self, mut d: Vec<Complex64>) -> Vec<Complex64> {
        self.transform(&mut d, &self.inv);
        let s = 1.0 / self.grid.len() as f64;
        d.iter_mut().for_each(|v| *v *= s);
        d
    }

    pub fn inverse(&self, d: Vec<Complex64>) -> Vec<f64> {
        self.inverse_complex(d).into_iter().map(|v| v.re).collect()
    }

    /// Frequency vector of flat spectral index `idx`.
    pub fn freq_vec(&self, idx: usize) -> [f64; 2] {
        let n = self.grid.points_per_axis;
        if self.grid.dim == 1 {
            [self.grid.freq(idx), 0.0]
        } else {
            [self.grid.freq(idx / n), self.grid.freq(idx % n)]
        }
    }

    /// True when the flat spectral index sits on a Nyquist line along `axis`.
    pub fn is_nyquist(&self, idx: usize, axis: usize) -> bool {
        let n = self.grid.points_per_axis;
        let k = if self.grid.dim == 1 { idx } else if axis == 0 { idx / n } else { idx % n };
        k == n / 2
    }

    /// Apply a Fourier multiplier `m(λ)` to a real grid function.
    pub fn multiply(&self, f: &[f64], m: impl Fn([f64; 2]) -> Complex64) -> Vec<f64> {
        let mut d = self.forward(f);
        for (i, v) in d.iter_mut().enumerate() {
            *v *= m(self.freq_vec(i));
        }
        self.inverse(d)
    }

    /// Spectral partial derivatives of order one (`axis`) with the Nyquist mode removed.
    pub fn derivative(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let mut d = self.forward(f);
        for (i, v) in d.iter_mut().enumerate() {
            if self.is_nyquist(i, axis) {
                *v = Complex64::new(0.0, 0.0);
            } else {
                *v *= Complex64::new(0.0, self.freq_vec(i)[axis]);
            }
        }
        self.inverse(d)
    }
}

/// Cubic Lagrange cardinal function of node 0 (support `[-2, 2]`, in units of `h`).
pub fn cubic_cardinal(u: f64) -> f64 {
    let v = u.abs();
    if v <= 1.0 {
        (v + 1.0) * (v - 1.0) * (v - 2.0) / 2.0
    } else if v < 2.0 {
        -(v - 1.0) * (v - 2.0) * (v - 3.0) / 6.0
    } else {
        0.0
    }
}

/// Periodic cubic interpolation of a 1-d grid function at `x`.
pub fn interp1_periodic(grid: &GridSpec, f: &[f64], x: f64) -> f64 {
    let n = grid.points_per_axis as i64;
    let h = grid.spacing();
    let u = (x + grid.half_extent) / h;
    let i = u.floor();
    let s = u - i;
    let i = i as i64;
    let mut acc = 0.0;
    for o in -1..=2i64 {
        let w = cubic_cardinal(s - o as f64);
        acc += w * f[(i + o).rem_euclid(n) as usize];
    }
    acc
}

/// Cubic interpolation with constant extrapolation beyond the grid ends.
pub fn interp1_clamped(grid: &GridSpec, f: &[f64], x: f64) -> f64 {
    let n = grid.points_per_axis as i64;
    let h = grid.spacing();
    let u = (x + grid.half_extent) / h;
    let i = u.floor();
    let s = u - i;
    let i = i as i64;
    let mut acc = 0.0;
    for o in -1..=2i64 {
        let w = cubic_cardinal(s - o as f64);
        acc += w * f[(i + o).clamp(0, n - 1) as usize];
    }
    acc
}

/// Periodic bicubic interpolation of a 2-d grid function.
pub fn interp2_periodic(grid: &GridSpec, f: &[f64], x: [f64; 2]) -> f64 {
    let n = grid.points_per_axis as i64;
    let h = grid.spacing();
    let u0 = (x[0] + grid.half_extent) / h;
    let u1 = (x[1] + grid.half_extent) / h;
    let (i0, i1) = (u0.floor(), u1.floor());
    let (s0, s1) = (u0 - i0, u1 - i1);
    let (i0, i1) = (i0 as i64, i1 as i64);
    let mut acc = 0.0;
    for a in -1..=2i64 {
        let wa = cubic_cardinal(s0 - a as f64);
        let r = (i0 + a).rem_euclid(n) as usize;
        for b in -1..=2i64 {
            let wb = cubic_cardinal(s1 - b as f64);
            acc += wa * wb * f[r * n as usize + (i1 + b).rem_euclid(n) as usize];
        }
    }
    acc
}
