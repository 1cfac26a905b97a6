//! Experiment configuration: a flat TOML table of experiment knobs.
//!
//! ```toml
//! problem_id = "helmholtz_circle_sin2theta"
//! method = "ibdl"                      # ibdl | ibsl
//! discretization = "finite_difference" # finite_difference | fourier_spectral
//! grid_sizes = [64, 128, 256]
//! ratio = 0.75                         # target ds/dx
//! m1 = 6                               # integer or "auto"
//! ```
//!
//! Optional keys: `methods`, `ratios` (iteration sweeps), `k`, `m2`, `tol`,
//! `max_iter`, `output_dir`, `normals` (exact | estimated), `interpolation`,
//! `boundary` (dirichlet | neumann), `box_half_width`, `strict`.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::bem::ProblemId;
use crate::experiments::{default_boundary, BandWidth, BoundaryKind, CaseOptions, NormalsMode};
use crate::grid::Discretization;
use crate::krylov::KrylovConfig;
use crate::solvers::Method;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{field}: {message}")]
    Invalid { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum M1Setting {
    Fixed(usize),
    Rule(String),
}

impl Default for M1Setting {
    fn default() -> Self {
        M1Setting::Fixed(6)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem_id: String,
    #[serde(default = "default_method")]
    pub method: Method,
    pub methods: Option<Vec<Method>>,
    #[serde(default = "default_discretization")]
    pub discretization: Discretization,
    #[serde(default)]
    pub grid_sizes: Vec<usize>,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    pub ratios: Option<Vec<f64>>,
    pub k: Option<f64>,
    #[serde(default)]
    pub m1: M1Setting,
    pub m2: Option<usize>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_normals")]
    pub normals: NormalsMode,
    #[serde(default = "default_true")]
    pub interpolation: bool,
    pub boundary: Option<BoundaryKind>,
    pub box_half_width: Option<f64>,
    #[serde(default)]
    pub strict: bool,
}

fn default_method() -> Method {
    Method::Ibdl
}
fn default_discretization() -> Discretization {
    Discretization::FiniteDifference
}
fn default_ratio() -> f64 {
    0.75
}
fn default_tol() -> f64 {
    1e-8
}
fn default_normals() -> NormalsMode {
    NormalsMode::Exact
}
fn default_true() -> bool {
    true
}

/// A checked configuration.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub problem: ProblemId,
    pub band: BandWidth,
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig = toml::from_str(text)?;
        let problem: ProblemId = config
            .problem_id
            .parse()
            .map_err(|e: crate::bem::UnknownProblem| invalid("problem_id", e.to_string()))?;
        if config.grid_sizes.is_empty() {
            return Err(invalid("grid_sizes", "at least one grid size is required"));
        }
        if let Some(n) = config.grid_sizes.iter().find(|n| !n.is_power_of_two() || **n < 16) {
            return Err(invalid("grid_sizes", format!("{n} is not a power of two >= 16")));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(config.ratio) {
            return Err(invalid("ratio", "must be positive"));
        }
        if let Some(rs) = &config.ratios {
            if rs.is_empty() || !rs.iter().all(|r| positive(*r)) {
                return Err(invalid("ratios", "must be a nonempty list of positive values"));
            }
        }
        if let Some(ms) = &config.methods {
            if ms.is_empty() {
                return Err(invalid("methods", "must not be empty"));
            }
        }
        if !positive(config.tol) {
            return Err(invalid("tol", "must be positive"));
        }
        if let Some(k) = config.k {
            if !(k.is_finite() && k >= 0.0) {
                return Err(invalid("k", "must be nonnegative"));
            }
        }
        if let Some(h) = config.box_half_width {
            if !positive(h) {
                return Err(invalid("box_half_width", "must be positive"));
            }
        }
        let band = match &config.m1 {
            M1Setting::Fixed(m) => BandWidth::Fixed(*m),
            M1Setting::Rule(s) if s == "auto" => BandWidth::Auto,
            M1Setting::Rule(s) => return Err(invalid("m1", format!("expected an integer or \"auto\", got \"{s}\""))),
        };
        Ok(Self { config, problem, band })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.config.grid_sizes
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.config.ratios.clone().unwrap_or_else(|| vec![self.config.ratio])
    }

    pub fn methods(&self) -> Vec<Method> {
        self.config.methods.clone().unwrap_or_else(|| vec![self.config.method])
    }

    /// Case options for grid size `n` with the configured method and ratio.
    pub fn case(&self, n: usize) -> CaseOptions {
        let c = &self.config;
        CaseOptions {
            problem: self.problem,
            method: c.method,
            boundary: c.boundary.unwrap_or_else(|| default_boundary(self.problem)),
            discretization: c.discretization,
            n,
            ratio: c.ratio,
            k: c.k.unwrap_or_else(|| self.problem.k()),
            band: self.band,
            m2: c.m2,
            krylov: KrylovConfig {
                tol: c.tol,
                max_iter: c.max_iter,
            },
            normals: c.normals,
            interpolate: c.interpolation,
            box_half_width: c.box_half_width,
        }
    }
}
