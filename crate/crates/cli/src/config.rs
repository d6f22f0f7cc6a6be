//! Experiment configs: one TOML document per run, a top-level `kind` and
//! `seed`, and one section of parameters for that kind.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("{field}: {msg}")]
    Invalid { field: String, msg: String },
}

fn invalid(field: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    SurfacePoisson,
    Minimize,
    BarycenterVerify,
    Kazhdan,
    AmenableCollapse,
    ThicknessScan,
    MargulisCheck,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::SurfacePoisson => "surface-poisson",
            Kind::Minimize => "minimize",
            Kind::BarycenterVerify => "barycenter-verify",
            Kind::Kazhdan => "kazhdan",
            Kind::AmenableCollapse => "amenable-collapse",
            Kind::ThicknessScan => "thickness-scan",
            Kind::MargulisCheck => "margulis-check",
        }
    }

    fn section(self) -> &'static str {
        match self {
            Kind::SurfacePoisson => "surface_poisson",
            Kind::Minimize => "minimize",
            Kind::BarycenterVerify => "barycenter",
            Kind::Kazhdan => "kazhdan",
            Kind::AmenableCollapse => "amenable",
            Kind::ThicknessScan => "thickness",
            Kind::MargulisCheck => "margulis",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default = "default_quadrature")]
    pub quadrature_order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface_poisson: Option<SurfacePoissonParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimize: Option<MinimizeParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barycenter: Option<BarycenterParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kazhdan: Option<KazhdanParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amenable: Option<AmenableParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thickness: Option<ThicknessParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margulis: Option<MargulisParams>,
    /// Where the cycle comes from, for `minimize` and `thickness-scan`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<CycleSpec>,
}

fn default_quadrature() -> usize {
    8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfacePoissonParams {
    #[serde(default = "default_genus")]
    pub genus: usize,
    pub c: Vec<f64>,
    pub radius: usize,
    pub mesh_level: usize,
    #[serde(default = "default_tail_bound")]
    pub tail_bound: f64,
    #[serde(default = "default_tile_order")]
    pub tile_order: usize,
    #[serde(default = "default_pullback_samples")]
    pub pullback_samples: usize,
    /// Skip the cycle and report only the pull-back identity.
    #[serde(default)]
    pub pullback_only: bool,
}

fn default_genus() -> usize {
    2
}
fn default_tail_bound() -> f64 {
    0.5
}
fn default_tile_order() -> usize {
    12
}
fn default_pullback_samples() -> usize {
    8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CycleSource {
    Poisson,
    Torus,
    Octahedron,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleSpec {
    pub source: CycleSource,
    #[serde(default = "default_genus")]
    pub genus: usize,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub radius: Option<usize>,
    #[serde(default)]
    pub mesh_level: Option<usize>,
    /// Box side for the torus source.
    #[serde(default)]
    pub side: Option<usize>,
    /// Relative size of the random vertex perturbation.
    #[serde(default)]
    pub perturbation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimizeParams {
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    #[serde(default = "default_step0")]
    pub step0: f64,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "default_delta_min")]
    pub delta_min: f64,
    #[serde(default = "default_one")]
    pub displacement_radius: usize,
    #[serde(default)]
    pub smoothing_every: Option<usize>,
    #[serde(default = "default_spread")]
    pub smoothing_spread: f64,
}

fn default_iters() -> usize {
    50
}
fn default_step0() -> f64 {
    0.1
}
fn default_grad_tol() -> f64 {
    1e-6
}
fn default_delta_min() -> f64 {
    1e-3
}
fn default_one() -> usize {
    1
}
fn default_spread() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Surface,
    FreeLoxodromic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarycenterParams {
    pub model: ModelKind,
    #[serde(default = "default_genus")]
    pub genus: usize,
    /// Translation length of the loxodromic generators.
    #[serde(default = "default_ell")]
    pub ell: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Word radius of the reference measure's atoms.
    #[serde(default = "default_measure_radius")]
    pub measure_radius: usize,
    /// Decay exponent of the reference measure; defaults to entropy + 2.
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default = "default_one")]
    pub support_radius: usize,
    #[serde(default = "default_h_step")]
    pub h_step: f64,
    #[serde(default = "default_clearance")]
    pub atom_clearance: f64,
}

fn default_ell() -> f64 {
    2.0
}
fn default_samples() -> usize {
    100
}
fn default_measure_radius() -> usize {
    4
}
fn default_h_step() -> f64 {
    1e-5
}
fn default_clearance() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KazhdanParams {
    /// Group description such as `cyclic 6` or `free 2`.
    pub group: String,
    pub generators: Vec<String>,
    /// Generators of a subgroup for the restriction check (finite groups).
    #[serde(default)]
    pub subgroup: Option<Vec<String>>,
    /// Ball radii for truncated upper bounds (infinite groups).
    #[serde(default)]
    pub radii: Option<Vec<usize>>,
    /// Ball radius for the operator-norm floor (free groups).
    #[serde(default)]
    pub kesten_radius: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmenableParams {
    pub sides: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThicknessParams {
    pub deltas: Vec<f64>,
    #[serde(default = "default_one")]
    pub radius: usize,
    #[serde(default = "default_sampling")]
    pub sampling: usize,
}

fn default_sampling() -> usize {
    4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    /// Point mass at the identity.
    Dirac,
    /// Indicator of a long segment of powers of the first element's root.
    Axis,
    /// Truncated Kazhdan optimizer for each consecutive pair.
    Optimal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MargulisParams {
    #[serde(default = "default_free_rank")]
    pub rank: usize,
    pub elements: Vec<String>,
    pub alpha: f64,
    pub witness: WitnessKind,
    #[serde(default = "default_witness_radius")]
    pub witness_radius: usize,
}

fn default_free_rank() -> usize {
    2
}
fn default_witness_radius() -> usize {
    3
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.quadrature_order == 0 {
            return Err(invalid("quadrature_order", "must be positive"));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads", "must be positive"));
        }
        let section = self.kind.section();
        let missing = || invalid(section, format!("section required for kind {}", self.kind.name()));
        match self.kind {
            Kind::SurfacePoisson => {
                let p = self.surface_poisson.as_ref().ok_or_else(missing)?;
                if p.c.is_empty() || p.c.iter().any(|&c| !(c > 1.0)) {
                    return Err(invalid("surface_poisson.c", "needs values above 1"));
                }
                if p.genus < 2 {
                    return Err(invalid("surface_poisson.genus", "must be at least 2"));
                }
                if !(p.tail_bound > 0.0 && p.tail_bound <= 1.0) {
                    return Err(invalid("surface_poisson.tail_bound", "must lie in (0, 1]"));
                }
            }
            Kind::Minimize => {
                let p = self.minimize.as_ref().ok_or_else(missing)?;
                self.check_cycle()?;
                if p.step0 <= 0.0 || p.grad_tol <= 0.0 {
                    return Err(invalid("minimize.step0", "step and tolerance must be positive"));
                }
                if p.smoothing_every == Some(0) {
                    return Err(invalid("minimize.smoothing_every", "must be positive"));
                }
            }
            Kind::BarycenterVerify => {
                let p = self.barycenter.as_ref().ok_or_else(missing)?;
                if p.samples == 0 {
                    return Err(invalid("barycenter.samples", "must be positive"));
                }
                if p.h_step <= 0.0 {
                    return Err(invalid("barycenter.h_step", "must be positive"));
                }
            }
            Kind::Kazhdan => {
                let p = self.kazhdan.as_ref().ok_or_else(missing)?;
                if p.generators.is_empty() {
                    return Err(invalid("kazhdan.generators", "must not be empty"));
                }
            }
            Kind::AmenableCollapse => {
                let p = self.amenable.as_ref().ok_or_else(missing)?;
                if p.sides.len() < 2 || p.sides.iter().any(|&l| l < 2) {
                    return Err(invalid("amenable.sides", "needs two or more sides, each at least 2"));
                }
            }
            Kind::ThicknessScan => {
                let p = self.thickness.as_ref().ok_or_else(missing)?;
                self.check_cycle()?;
                if p.deltas.is_empty() {
                    return Err(invalid("thickness.deltas", "must not be empty"));
                }
            }
            Kind::MargulisCheck => {
                let p = self.margulis.as_ref().ok_or_else(missing)?;
                if p.elements.is_empty() {
                    return Err(invalid("margulis.elements", "must not be empty"));
                }
                if !(p.alpha > 0.0) {
                    return Err(invalid("margulis.alpha", "must be positive"));
                }
            }
        }
        Ok(())
    }

    fn check_cycle(&self) -> Result<(), ConfigError> {
        let c = self.cycle.as_ref().ok_or_else(|| invalid("cycle", "section required"))?;
        match c.source {
            CycleSource::Poisson => {
                if c.c.is_none_or(|c| c <= 1.0) {
                    return Err(invalid("cycle.c", "poisson source needs c > 1"));
                }
                if c.radius.is_none() {
                    return Err(invalid("cycle.radius", "poisson source needs a radius"));
                }
                if c.mesh_level.is_none() {
                    return Err(invalid("cycle.mesh_level", "poisson source needs a mesh level"));
                }
            }
            CycleSource::Torus => {
                if c.side.is_none_or(|l| l < 2) {
                    return Err(invalid("cycle.side", "torus source needs a side of at least 2"));
                }
            }
            CycleSource::Octahedron => {}
        }
        if c.perturbation < 0.0 {
            return Err(invalid("cycle.perturbation", "must be nonnegative"));
        }
        Ok(())
    }
}
