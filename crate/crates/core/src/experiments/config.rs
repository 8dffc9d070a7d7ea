//! Experiment configuration files (TOML). Unknown keys are errors; every error carries its key path.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};
use crate::flow::DriftField;
use crate::grid::GridSpec;
use crate::proxy::Profile;
use crate::spectral_models::{ModelKind, SpectralSpec, StableModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Kernel,
    Pbeta,
    Kolokoltsov,
    Flow,
    Proxy,
    Solve,
    Schauder,
    Fracop,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Kernel,
        ExperimentKind::Pbeta,
        ExperimentKind::Kolokoltsov,
        ExperimentKind::Flow,
        ExperimentKind::Proxy,
        ExperimentKind::Solve,
        ExperimentKind::Schauder,
        ExperimentKind::Fracop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Kernel => "kernel",
            ExperimentKind::Pbeta => "pbeta",
            ExperimentKind::Kolokoltsov => "kolokoltsov",
            ExperimentKind::Flow => "flow",
            ExperimentKind::Proxy => "proxy",
            ExperimentKind::Solve => "solve",
            ExperimentKind::Schauder => "schauder",
            ExperimentKind::Fracop => "fracop",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    fn needs(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::Kernel | ExperimentKind::Pbeta | ExperimentKind::Kolokoltsov => &["model", "grid", "time"],
            ExperimentKind::Flow => &["drift", "time"],
            ExperimentKind::Proxy => &["model", "drift", "grid", "time"],
            ExperimentKind::Solve | ExperimentKind::Schauder => &["model", "drift", "grid", "time", "data"],
            ExperimentKind::Fracop => &["grid"],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub kind: ModelKind,
    pub alpha: f64,
    pub dim: usize,
    #[serde(default)]
    pub mass: f64,
    #[serde(default)]
    pub trunc_radius: f64,
    #[serde(default = "uniform")]
    pub spectral: SpectralSpec,
}

fn uniform() -> SpectralSpec {
    SpectralSpec::Uniform
}

impl ModelBlock {
    pub fn build(&self) -> Result<StableModel> {
        if self.kind == ModelKind::SmoothSpectralDensity && self.spectral == SpectralSpec::Uniform {
            return StableModel::reference_smooth(self.alpha, self.dim);
        }
        StableModel::new(self.kind, self.alpha, self.dim, self.mass, self.trunc_radius, self.spectral.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftType {
    Zero,
    Constant,
    Linear,
    HolderBump,
    HolderCusp,
    ShiftedSin,
}

/// Drift block; which optional keys are read depends on `type`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftBlock {
    #[serde(rename = "type")]
    pub kind: DriftType,
    pub beta: f64,
    #[serde(default = "one_dim")]
    pub dim: usize,
    pub k0: Option<f64>,
    pub center: Option<Vec<f64>>,
    /// Constant vector or row-major matrix.
    pub value: Option<Vec<f64>>,
    pub offset: Option<f64>,
    pub amplitude: Option<f64>,
    pub locality_radius: Option<f64>,
}

fn one_dim() -> usize {
    1
}

fn need<T: Copy>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| LabError::Config { path: format!("drift.{key}"), message: "missing for this drift type".into() })
}

impl DriftBlock {
    pub fn build(&self) -> Result<DriftField> {
        let center = self.center.clone().unwrap_or_else(|| vec![0.0; self.dim]);
        let f = match self.kind {
            DriftType::Zero => DriftField::zero(self.dim, self.beta),
            DriftType::Constant => DriftField::constant(
                self.value.as_deref().ok_or_else(|| LabError::Config { path: "drift.value".into(), message: "missing".into() })?,
                self.beta,
            ),
            DriftType::Linear => DriftField::linear(
                self.value.as_deref().ok_or_else(|| LabError::Config { path: "drift.value".into(), message: "missing".into() })?,
                self.dim,
                self.beta,
            ),
            DriftType::HolderBump => DriftField::holder_bump(self.dim, need(self.k0, "k0")?, self.beta, &center),
            DriftType::HolderCusp => DriftField::holder_cusp(self.dim, need(self.k0, "k0")?, self.beta, &center),
            DriftType::ShiftedSin => {
                DriftField::shifted_sin(self.dim, need(self.offset, "offset")?, need(self.amplitude, "amplitude")?, self.beta)
            }
        }?;
        match self.locality_radius {
            Some(r) => f.with_locality_radius(r),
            None => Ok(f),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub points: usize,
    /// Half-width of the periodic box; kernel runs choose it from the aliasing guard when absent.
    pub half_extent: Option<f64>,
}

impl GridBlock {
    pub fn spec(&self, dim: usize, default_half: f64) -> Result<GridSpec> {
        GridSpec::new(dim, self.half_extent.unwrap_or(default_half), self.points)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeBlock {
    /// Explicit evaluation times.
    pub t: Option<Vec<f64>>,
    /// Dyadic ladder `2^{-ladder}, …, 1`.
    pub ladder: Option<u32>,
    pub horizon: Option<f64>,
}

impl TimeBlock {
    pub fn times(&self) -> Result<Vec<f64>> {
        if let Some(t) = &self.t {
            return Ok(t.clone());
        }
        if let Some(j) = self.ladder {
            return Ok(crate::integrability::time_ladder(j));
        }
        Err(LabError::Config { path: "time.t".into(), message: "give `t` or `ladder`".into() })
    }

    pub fn horizon(&self) -> Result<f64> {
        self.horizon.ok_or_else(|| LabError::Config { path: "time.horizon".into(), message: "missing".into() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataBlock {
    pub f: Profile,
    pub g: Profile,
}

/// Kind-specific parameters; all optional with documented defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// pbeta, proxy: Hölder index of the moment / test function.
    pub beta: Option<f64>,
    /// pbeta: extents for the divergence certificate (default 10 to 10^4, three decades).
    pub extents: Option<Vec<f64>>,
    /// kernel: Monte-Carlo sample count (one dimension; 0 disables).
    pub samples: Option<usize>,
    /// kolokoltsov: inner/outer threshold `K`.
    pub threshold: Option<f64>,
    /// flow: number of random pairs, pair spread, ODE step.
    pub pairs: Option<usize>,
    pub spread: Option<f64>,
    pub step: Option<f64>,
    /// flow: model order used in the ratio (default from `model.alpha`).
    pub alpha: Option<f64>,
    /// proxy: gaps `s − t`; freezing point.
    pub gaps: Option<Vec<f64>>,
    pub xi: Option<f64>,
    /// solve, schauder: fixed-point tolerance, viscosity ladder and viscosity time step.
    pub tol: Option<f64>,
    pub eps: Option<Vec<f64>>,
    pub time_step: Option<f64>,
    pub slices: Option<usize>,
    pub mesh_nodes: Option<usize>,
    /// schauder: drift offsets `c` in `F = c + a sin`, and the OU matrix entry.
    pub offsets: Option<Vec<f64>>,
    pub ou: Option<f64>,
    /// fracop: `(θ, γ)` pairs and family size.
    pub theta_gamma: Option<Vec<[f64; 2]>>,
    pub family: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Scenario label, used in error messages and the manifest.
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub output: Option<String>,
    pub model: Option<ModelBlock>,
    pub drift: Option<DriftBlock>,
    pub grid: Option<GridBlock>,
    pub time: Option<TimeBlock>,
    pub data: Option<DataBlock>,
    #[serde(default)]
    pub params: Params,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| LabError::Config {
            path: e.path().to_string(),
            message: e.inner().message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    fn block_present(&self, key: &str) -> bool {
        match key {
            "model" => self.model.is_some(),
            "drift" => self.drift.is_some(),
            "grid" => self.grid.is_some(),
            "time" => self.time.is_some(),
            "data" => self.data.is_some(),
            _ => true,
        }
    }

    /// Required blocks for the kind, and `α + β > 1` for the solver kinds.
    pub fn validate(&self) -> Result<()> {
        for key in self.kind.needs() {
            if !self.block_present(key) {
                return Err(LabError::Config { path: key.to_string(), message: format!("required for kind `{}`", self.kind.name()) });
            }
        }
        if matches!(self.kind, ExperimentKind::Proxy | ExperimentKind::Solve | ExperimentKind::Schauder) {
            let a = self.model.as_ref().unwrap().alpha;
            let b = self.drift.as_ref().unwrap().beta;
            if a + b <= 1.0 {
                return Err(LabError::Config { path: "drift.beta".into(), message: format!("alpha + beta = {} must exceed 1", a + b) });
            }
        }
        if self.kind == ExperimentKind::Flow && self.model.is_none() && self.params.alpha.is_none() {
            return Err(LabError::Config { path: "params.alpha".into(), message: "flow needs `model` or `params.alpha`".into() });
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form; equal for configs that parse to the same value.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn label(&self) -> String {
        if self.name.is_empty() {
            self.kind.name().to_string()
        } else {
            self.name.clone()
        }
    }
}
