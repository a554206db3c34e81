use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::Deserialize;

use super::expr::{MatrixSpec, VectorSpec};
use crate::error::{Error, Result};
use crate::evolution::TimeGrid;
use crate::klein_gordon::{Boundary, MassProfile, SpatialProfile};
use crate::metric::Gauge;

/// A scenario file.
///
/// ```toml
/// name = "toy2x2_driven"
///
/// [model]
/// kind = "toy"
/// generator = [[1, "0.5 + 0.3*sin(2*t)"], [0.2, -1]]
///
/// [grid]
/// t_end = 5.0
/// dt = 1e-3
/// sample_stride = 10
///
/// [checks.overlap_drift]
/// tolerance = 1e-9
/// ```
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub model: ModelConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub gauge: GaugeChoice,
    /// Overrides of the default checks, keyed by residual column.
    #[serde(default)]
    pub checks: IndexMap<String, CheckConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_name() -> String {
    "scenario".into()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// Any square generator given entry by entry.
    Toy { generator: MatrixSpec },
    /// Driven non-Hermitian tight-binding chain of adjustable size:
    /// on-site `onsite (j - (n-1)/2)`, hopping `forward (1 + drive sin(frequency t))`
    /// to the right and `backward` to the left.
    Chain {
        n: usize,
        #[serde(default = "chain_onsite")]
        onsite: f64,
        #[serde(default = "chain_forward")]
        forward: f64,
        #[serde(default = "chain_backward")]
        backward: f64,
        #[serde(default = "chain_drive")]
        drive: f64,
        #[serde(default = "one")]
        frequency: f64,
    },
    /// Feshbach-Villars Klein-Gordon lattice.
    KgLattice {
        n_sites: usize,
        dx: f64,
        #[serde(default)]
        boundary: BoundaryChoice,
        #[serde(default)]
        mass: MassConfig,
        #[serde(default)]
        complex_mass: bool,
    },
    /// Hermitian reference picture with analytic Dyson map.
    Cross {
        omega: MatrixSpec,
        #[serde(default)]
        omega_dot: Option<MatrixSpec>,
        h: MatrixSpec,
        #[serde(default)]
        dt_probe: Option<f64>,
    },
}

fn chain_onsite() -> f64 {
    1.0
}
fn chain_forward() -> f64 {
    0.3
}
fn chain_backward() -> f64 {
    0.1
}
fn chain_drive() -> f64 {
    0.2
}
fn one() -> f64 {
    1.0
}

impl ModelConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Toy { .. } => "toy",
            Self::Chain { .. } => "chain",
            Self::KgLattice { .. } => "kg_lattice",
            Self::Cross { .. } => "cross",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryChoice {
    #[default]
    Dirichlet,
    Periodic,
}

impl From<BoundaryChoice> for Boundary {
    fn from(b: BoundaryChoice) -> Self {
        match b {
            BoundaryChoice::Dirichlet => Boundary::Dirichlet,
            BoundaryChoice::Periodic => Boundary::Periodic,
        }
    }
}

/// `m^2(x, t) = mu0 + mu1 f(x) sin(nu t) + i gamma`.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassConfig {
    #[serde(default)]
    pub mu0: f64,
    #[serde(default)]
    pub mu1: f64,
    #[serde(default)]
    pub nu: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub profile: ProfileConfig,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    #[default]
    Uniform,
    Gaussian {
        center: f64,
        width: f64,
    },
    Linear {
        slope: f64,
        intercept: f64,
    },
}

impl MassConfig {
    pub fn to_profile(&self) -> MassProfile {
        MassProfile {
            mu0: self.mu0,
            mu1: self.mu1,
            nu: self.nu,
            gamma: self.gamma,
            profile: match self.profile {
                ProfileConfig::Uniform => SpatialProfile::Uniform,
                ProfileConfig::Gaussian { center, width } => {
                    SpatialProfile::Gaussian { center, width }
                }
                ProfileConfig::Linear { slope, intercept } => {
                    SpatialProfile::Linear { slope, intercept }
                }
            },
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "one_usize")]
    pub sample_stride: usize,
}

fn one_usize() -> usize {
    1
}

impl GridConfig {
    pub fn to_grid(&self) -> Result<TimeGrid> {
        if !self.t_start.is_finite() {
            return Err(Error::config("grid.t_start", "must be finite"));
        }
        if !(self.t_end.is_finite() && self.t_end > self.t_start) {
            return Err(Error::config(
                "grid.t_end",
                "must be finite and after t_start",
            ));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config("grid.dt", "must be positive"));
        }
        if self.sample_stride == 0 {
            return Err(Error::config("grid.sample_stride", "must be at least 1"));
        }
        TimeGrid::new(self.t_start, self.t_end, self.dt, self.sample_stride)
            .map_err(|e| Error::config("grid.dt", e.to_string()))
    }
}

/// Initial basis: `"eigen"` (eigenbasis of `G(t_start)`), `"standard"`, or an
/// explicit list of kets whose dual bras are computed.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum BasisConfig {
    Named(String),
    Kets { kets: MatrixSpec },
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self::Named("eigen".into())
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub basis: BasisConfig,
    /// Tracked ket; textbook-space state for cross models.
    pub psi0: Option<VectorSpec>,
    /// Conserved energies `E_n`. Defaults to `Re <L_n|G(t_start)|R_n>`.
    pub energies: Option<Vec<f64>>,
    /// Observable given directly in the computational space.
    pub q: Option<MatrixSpec>,
    /// Hermitian observable lowered through the initial Dyson map.
    pub q_textbook: Option<MatrixSpec>,
    /// Source term of the observable flow, a matrix expression of `t`.
    pub k: Option<MatrixSpec>,
    /// Standing-wave mode of the initial KG state.
    pub mode: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum GaugeChoice {
    #[default]
    BasisAligned,
    IdentityV,
    SqrtTheta,
}

impl From<GaugeChoice> for Gauge {
    fn from(g: GaugeChoice) -> Self {
        match g {
            GaugeChoice::BasisAligned => Gauge::BasisAligned,
            GaugeChoice::IdentityV => Gauge::IdentityV,
            GaugeChoice::SqrtTheta => Gauge::SqrtTheta,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default = "yes")]
    pub enabled: bool,
    /// Non-fatal checks are reported without affecting the exit status.
    #[serde(default = "yes")]
    pub fatal: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let message = e.inner().message().trim().to_string();
            Error::config(if path == "." { "<root>".into() } else { path }, message)
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}
