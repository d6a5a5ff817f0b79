//! Experiment configuration files (TOML). Every table rejects unknown keys.
//!
//! ```toml
//! seed = 42
//! output_dir = "runs/brownian"
//!
//! [experiment]
//! kind = "sde"
//! dt = 0.001
//! n_paths = 10000
//!
//! [experiment.family]
//! name = "brownian"
//! d = 3
//! ```

use std::path::{Path, PathBuf};

use parabolic_core::sde::Pairing;
use parabolic_core::Order;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    /// Where runs are written; not part of the canonical form or the hash.
    #[serde(default = "default_output_dir", skip_serializing)]
    pub output_dir: PathBuf,
    pub experiment: Experiment,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Norms,
    Embed,
    Variational,
    Pde,
    Degiorgi,
    Sde,
    Acceptance,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Norms => "norms",
            Kind::Embed => "embed",
            Kind::Variational => "variational",
            Kind::Pde => "pde",
            Kind::Degiorgi => "degiorgi",
            Kind::Sde => "sde",
            Kind::Acceptance => "acceptance",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    Norms(NormsParams),
    Embed(EmbedParams),
    Variational(VariationalParams),
    Pde(PdeParams),
    Degiorgi(DegiorgiParams),
    Sde(SdeParams),
    Acceptance(AcceptanceParams),
}

impl Experiment {
    pub fn kind(&self) -> Kind {
        match self {
            Experiment::Norms(_) => Kind::Norms,
            Experiment::Embed(_) => Kind::Embed,
            Experiment::Variational(_) => Kind::Variational,
            Experiment::Pde(_) => Kind::Pde,
            Experiment::Degiorgi(_) => Kind::Degiorgi,
            Experiment::Sde(_) => Kind::Sde,
            Experiment::Acceptance(_) => Kind::Acceptance,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn four() -> f64 {
    4.0
}

fn infinity() -> f64 {
    f64::INFINITY
}

/// Mixed norm of a canned test function on the unit box `[0, 1]^d` over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsParams {
    pub function: String,
    pub d: usize,
    pub cells: usize,
    pub steps: usize,
    pub p: f64,
    pub q: f64,
    pub order: Order,
    /// Also report the localized norm over windows of this radius.
    pub window_radius: Option<f64>,
}

/// Admissibility table of an exponent predicate over a `(p, q)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedParams {
    pub d: usize,
    #[serde(default = "infinity")]
    pub p0: f64,
    /// One of `forcing`, `energy`, `drift`, `divergence-drift`.
    pub predicate: String,
    pub p_values: Vec<f64>,
    pub q_values: Vec<f64>,
}

/// Cutoff functional of one variational problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationalParams {
    pub tau: f64,
    pub delta: f64,
    pub alphas: Vec<f64>,
    pub ps: Vec<f64>,
    pub betas: Vec<f64>,
    /// Cell averages per component on a uniform grid of `[tau, delta]`.
    pub densities: Vec<Vec<f64>>,
    pub knots: usize,
    /// Gaps `delta - tau` of a unit-density sweep, if wanted.
    #[serde(default)]
    pub gap_sweep: Vec<f64>,
}

/// Forcing bump `amplitude (1 - |x|²/radius²)_+²` switched on for `t < until`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpParams {
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "one")]
    pub until: f64,
}

impl Default for BumpParams {
    fn default() -> Self {
        BumpParams {
            amplitude: 1.0,
            radius: 1.0,
            until: 1.0,
        }
    }
}

/// Coefficient family parameters shared by the PDE and SDE experiments; each
/// family reads the fields it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyParams {
    pub name: String,
    pub d: usize,
    #[serde(default = "four")]
    pub big_r: f64,
    pub n: Option<u32>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    pub power: Option<f64>,
    pub shift: Option<f64>,
    pub omega: Option<f64>,
    pub rho: Option<f64>,
    /// Constant `sigma` rows of the `custom` SDE family.
    pub sigma: Option<Vec<Vec<f64>>>,
    /// Constant drift of the `custom` SDE family.
    pub drift: Option<Vec<f64>>,
}

impl FamilyParams {
    pub fn named(name: &str, d: usize) -> Self {
        FamilyParams {
            name: name.into(),
            d,
            big_r: 4.0,
            n: None,
            alpha: None,
            beta: None,
            lambda: None,
            power: None,
            shift: None,
            omega: None,
            rho: None,
            sigma: None,
            drift: None,
        }
    }
}

/// Solve on `[-half_width, half_width]^d` from zero data and report the
/// boundedness ratio and weak residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeParams {
    pub field: FamilyParams,
    pub half_width: f64,
    pub h: f64,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default)]
    pub forcing: BumpParams,
    /// Integrability of the inverse ellipticity bound used by the report.
    #[serde(default = "infinity")]
    pub p0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecursionConfig {
    pub c0: f64,
    pub lambda: f64,
    pub deltas: Vec<f64>,
    pub a1: f64,
    pub n_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub kappa: f64,
    pub tau: f64,
    pub sigma: f64,
    pub n_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegiorgiParams {
    pub recursion: Option<RecursionConfig>,
    pub schedule: Option<ScheduleConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrylovConfig {
    /// Radius of the ball indicator centred at the origin.
    pub radius: f64,
    pub t1s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeParams {
    pub family: FamilyParams,
    #[serde(default)]
    pub x0: Vec<f64>,
    #[serde(default)]
    pub s: f64,
    #[serde(default = "one")]
    pub t_final: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub krylov: Option<KrylovConfig>,
    /// Window lengths of the modulus report, in steps.
    #[serde(default)]
    pub modulus_steps: Vec<usize>,
    #[serde(default)]
    pub sup_moment: bool,
    #[serde(default)]
    pub second_moment: bool,
    /// Write the full ensemble as a binary array with a JSON header.
    #[serde(default)]
    pub export_paths: bool,
    pub cauchy: Option<CauchyConfig>,
    pub perturbation: Option<PerturbationConfig>,
}

/// Terminal-law distances between consecutive mollification indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CauchyConfig {
    pub n_list: Vec<u32>,
    #[serde(default = "shared")]
    pub pairing: Pairing,
}

fn shared() -> Pairing {
    Pairing::Shared
}

/// Shared-noise divergence of paths started at `x0` and `x0 + eps e_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    pub eps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceParams {
    /// Criterion numbers to run; all when empty.
    #[serde(default)]
    pub criteria: Vec<u32>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| LabError::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn acceptance(seed: u64, output_dir: PathBuf) -> Self {
        ExperimentConfig {
            seed,
            output_dir,
            experiment: Experiment::Acceptance(AcceptanceParams::default()),
        }
    }

    /// Canonical TOML rendering; whitespace and key order of the input do not matter.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical rendering, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}
