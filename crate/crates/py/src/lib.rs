//! Python bindings. Reports come back as plain dicts.

use std::path::Path;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use schauder_core::error::LabError;
use schauder_core::experiments::{self, ExperimentConfig};
use schauder_core::flow::{self, DriftField};
use schauder_core::grid::GridSpec;
use schauder_core::holder;
use schauder_core::integrability;
use schauder_core::kernel;
use schauder_core::proxy::{self, FreezingPair, Profile};
use schauder_core::spectral_models::StableModel;

fn to_py(e: LabError) -> PyErr {
    if e.is_validation() || matches!(e, LabError::InvalidParameter(_) | LabError::GridRejected(_)) {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn profile(py: Python<'_>, spec: &Bound<'_, PyDict>) -> PyResult<Profile> {
    let text: String = py.import("json")?.call_method1("dumps", (spec,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(format!("profile: {e}")))
}

/// A Lévy-type operator `L^α` with its symbol.
#[pyclass(name = "StableModel", frozen)]
struct PyStableModel {
    inner: StableModel,
}

#[pymethods]
impl PyStableModel {
    #[staticmethod]
    #[pyo3(signature = (alpha, dim=1))]
    fn isotropic(alpha: f64, dim: usize) -> PyResult<Self> {
        StableModel::isotropic(alpha, dim).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn cylindrical(alpha: f64, weights: Vec<f64>) -> PyResult<Self> {
        StableModel::cylindrical(alpha, weights).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (alpha, mass, dim=1))]
    fn relativistic(alpha: f64, mass: f64, dim: usize) -> PyResult<Self> {
        StableModel::relativistic(alpha, dim, mass).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (alpha, radius, dim=1))]
    fn truncated(alpha: f64, radius: f64, dim: usize) -> PyResult<Self> {
        StableModel::truncated(alpha, dim, radius).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (alpha, dim=1, samples=None))]
    fn smooth(alpha: f64, dim: usize, samples: Option<Vec<f64>>) -> PyResult<Self> {
        match samples {
            Some(s) => StableModel::smooth(alpha, dim, s),
            None => StableModel::reference_smooth(alpha, dim),
        }
        .map(|inner| Self { inner })
        .map_err(to_py)
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    #[getter]
    fn kind(&self) -> String {
        format!("{:?}", self.inner.kind)
    }

    /// `Ψ(λ)`, nonpositive.
    fn symbol(&self, lam: Vec<f64>) -> PyResult<f64> {
        self.inner.symbol(&lam).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("StableModel({:?}, alpha={}, dim={})", self.inner.kind, self.inner.alpha, self.inner.dim)
    }
}

/// A drift `F(t, x)` with declared Hölder index `beta`.
#[pyclass(name = "DriftField", frozen)]
struct PyDriftField {
    inner: DriftField,
}

#[pymethods]
impl PyDriftField {
    #[staticmethod]
    #[pyo3(signature = (dim, beta=0.5))]
    fn zero(dim: usize, beta: f64) -> PyResult<Self> {
        DriftField::zero(dim, beta).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (b, beta=0.5))]
    fn constant(b: Vec<f64>, beta: f64) -> PyResult<Self> {
        DriftField::constant(&b, beta).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (a, dim, beta=0.5))]
    fn linear(a: Vec<f64>, dim: usize, beta: f64) -> PyResult<Self> {
        DriftField::linear(&a, dim, beta).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn holder_bump(dim: usize, k0: f64, beta: f64, center: Vec<f64>) -> PyResult<Self> {
        DriftField::holder_bump(dim, k0, beta, &center).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn holder_cusp(dim: usize, k0: f64, beta: f64, center: Vec<f64>) -> PyResult<Self> {
        DriftField::holder_cusp(dim, k0, beta, &center).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn shifted_sin(dim: usize, offset: f64, amplitude: f64, beta: f64) -> PyResult<Self> {
        DriftField::shifted_sin(dim, offset, amplitude, beta).map(|inner| Self { inner }).map_err(to_py)
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    fn eval(&self, t: f64, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let mut p = [0.0; 2];
        for (c, v) in p.iter_mut().zip(&x) {
            *c = *v;
        }
        let v = self.inner.eval_checked(t, p).map_err(to_py)?;
        Ok(v[..self.inner.dim].to_vec())
    }

    fn __repr__(&self) -> String {
        format!("DriftField({:?}, beta={})", self.inner.kind, self.inner.beta)
    }
}

/// Transition density on an admissible grid: `(axis, p, dp, d2p, tail_mass)` in one dimension.
#[pyfunction(name = "kernel")]
#[pyo3(signature = (model, t, points=4096))]
fn kernel_density<'py>(py: Python<'py>, model: PyRef<'_, PyStableModel>, t: f64, points: usize) -> PyResult<Bound<'py, PyDict>> {
    let model = model.inner.clone();
    let field = py.detach(|| kernel::kernel_field(&model, t, points)).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("axis", field.grid.axis())?;
    out.set_item("half_extent", field.grid.half_extent)?;
    out.set_item("p", field.p.clone())?;
    out.set_item("dp", field.dp.clone())?;
    out.set_item("d2p", field.d2p.clone())?;
    out.set_item("total_mass", field.total_mass())?;
    out.set_item("tail_mass", field.tail_mass_estimate)?;
    out.set_item("at_origin", field.at_origin())?;
    Ok(out)
}

/// Slopes of the derivative moment integrals against `t`.
#[pyfunction]
#[pyo3(signature = (model, beta, t_values, points=None))]
fn pbeta<'py>(
    py: Python<'py>,
    model: PyRef<'_, PyStableModel>,
    beta: f64,
    t_values: Vec<f64>,
    points: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let model = model.inner.clone();
    let n = points.unwrap_or_else(|| integrability::default_points(model.dim));
    let report = py.detach(|| integrability::pbeta_report(&model, beta, &t_values, n)).map_err(to_py)?;
    to_dict(py, &report)
}

/// Kolokoltsov envelope ratios of the kernel at time `t`.
#[pyfunction]
#[pyo3(signature = (model, t, threshold=1.0, points=4096))]
fn kolokoltsov<'py>(
    py: Python<'py>,
    model: PyRef<'_, PyStableModel>,
    t: f64,
    threshold: f64,
    points: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let model = model.inner.clone();
    let env = py
        .detach(|| kernel::kernel_field(&model, t, points).and_then(|f| integrability::kolokoltsov_check(&f, threshold)))
        .map_err(to_py)?;
    to_dict(py, &env)
}

/// Empirical constant of the flow stability bound over random pairs.
#[pyfunction]
#[pyo3(signature = (drift, alpha, pairs=500, spread=2.0, step=2e-3, seed=0))]
fn flow_stability<'py>(
    py: Python<'py>,
    drift: PyRef<'_, PyDriftField>,
    alpha: f64,
    pairs: usize,
    spread: f64,
    step: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let d = &drift.inner.clone();
    let ps = flow::random_pairs(pairs, d.dim, 1.0, spread, d.locality_radius, seed);
    let report = py.detach(|| flow::flow_stability_check(d, alpha, &ps, step)).map_err(to_py)?;
    to_dict(py, &report)
}

/// Gradient and Hessian decay of the frozen semigroup against the time gap.
#[pyfunction]
#[pyo3(signature = (model, drift, phi, beta, gaps, xi=0.0, flow_step=1e-3))]
#[allow(clippy::too_many_arguments)]
fn smoothing_probe<'py>(
    py: Python<'py>,
    model: PyRef<'_, PyStableModel>,
    drift: PyRef<'_, PyDriftField>,
    phi: &Bound<'_, PyDict>,
    beta: f64,
    gaps: Vec<f64>,
    xi: f64,
    flow_step: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let phi = profile(py, phi)?;
    let m = &model.inner.clone();
    let d = &drift.inner.clone();
    let min_gap = gaps.first().copied().unwrap_or(1.0);
    let report = py
        .detach(|| {
            let grid = proxy::smoothing_grid(m, std::f64::consts::PI, min_gap, 1 << 22)?;
            let pair = FreezingPair::new(0.0, &[xi, 0.0][..m.dim]);
            proxy::smoothing_probe(m, d, pair, beta, &gaps, &phi, &grid, flow_step)
        })
        .map_err(to_py)?;
    to_dict(py, &report)
}

/// Sampled Hölder seminorm of `values` on the 1-d grid `[-L, L)`.
#[pyfunction]
#[pyo3(signature = (values, half_extent, gamma, pairs=20000, seed=0))]
fn holder_seminorm<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    half_extent: f64,
    gamma: f64,
    pairs: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let grid = GridSpec::new(1, half_extent, values.len()).map_err(to_py)?;
    let report = holder::holder_seminorm(&values, &grid, gamma, pairs, seed).map_err(to_py)?;
    to_dict(py, &report)
}

/// Runs an experiment from TOML text into `out_dir`; returns the manifest.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config_toml: &str, out_dir: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = ExperimentConfig::from_toml(config_toml).map_err(to_py)?;
    let manifest = py.detach(|| experiments::run(&cfg, Path::new(out_dir))).map_err(to_py)?;
    to_dict(py, &manifest)
}

#[pymodule]
fn schauder_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStableModel>()?;
    m.add_class::<PyDriftField>()?;
    m.add_function(wrap_pyfunction!(kernel_density, m)?)?;
    m.add_function(wrap_pyfunction!(pbeta, m)?)?;
    m.add_function(wrap_pyfunction!(kolokoltsov, m)?)?;
    m.add_function(wrap_pyfunction!(flow_stability, m)?)?;
    m.add_function(wrap_pyfunction!(smoothing_probe, m)?)?;
    m.add_function(wrap_pyfunction!(holder_seminorm, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
