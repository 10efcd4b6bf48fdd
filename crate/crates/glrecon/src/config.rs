//! Experiment configuration: a TOML file with nested sections for the
//! problem setup, the noise model, the initializers, the solver
//! constants, and the stopping rules. Unknown keys are rejected so
//! typos surface as configuration errors instead of silently applied
//! defaults.

use crate::error::{Error, Result};
use crate::graph::GraphParams;
use crate::init::{default_inner_iters, InitKind, InitializerSpec};
use crate::operators::MAX_IMAGE_SIZE;
use crate::phantom::MIN_PHANTOM_SIZE;
use crate::solver::SolverParams;
use crate::stopping::{RuleKind, StoppingPolicy};
use std::path::Path;

/// Which forward problem the experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Ct,
    PhaseRetrieval,
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ProblemKind::Ct => "ct",
            ProblemKind::PhaseRetrieval => "phase_retrieval",
        };
        write!(f, "{s}")
    }
}

/// Problem-size presets used by the command line: `paper` keeps the
/// configured sizes, `ci` shrinks them for fast smoke runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Paper,
    Ci,
}

impl std::str::FromStr for Scale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Scale::Paper),
            "ci" => Ok(Scale::Ci),
            other => Err(Error::config(format!("unknown scale {other:?}, expected paper or ci"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub problem: ProblemKind,
    pub image_size: usize,
    pub n_angles: usize,
    /// Ensemble sizes to sweep.
    pub m_values: Vec<usize>,
    pub seed: u64,
    pub output_dir: String,
    /// Foreground fraction of the blob phantom (phase retrieval only).
    #[serde(default = "default_blob_density")]
    pub blob_density: f64,
}

fn default_blob_density() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// Noise scale on the physical measurement.
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitializerSection {
    pub kinds: Vec<InitKind>,
    #[serde(default = "default_inner_iters")]
    pub inner_iters: usize,
    /// Optional override of the regularization-weight grid shared by
    /// the variational initializers.
    #[serde(default)]
    pub theta_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingSection {
    pub rules: Vec<RuleKind>,
    #[serde(default = "default_tau_coeff")]
    pub tau_coeff: f64,
    #[serde(default = "default_tau_exponent")]
    pub tau_exponent: f64,
    #[serde(default = "default_varrho")]
    pub varrho: f64,
}

fn default_tau_coeff() -> f64 {
    2.0
}

fn default_tau_exponent() -> f64 {
    0.5
}

fn default_varrho() -> f64 {
    100.0
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub noise: NoiseSection,
    pub initializer: InitializerSection,
    pub solver: SolverParams,
    pub stopping: StoppingSection,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.image_size < MIN_PHANTOM_SIZE {
            return Err(Error::config(format!(
                "image_size {} below minimum {MIN_PHANTOM_SIZE}",
                e.image_size
            )));
        }
        if e.image_size > MAX_IMAGE_SIZE {
            return Err(Error::config(format!(
                "image_size {} above maximum {MAX_IMAGE_SIZE}",
                e.image_size
            )));
        }
        if e.n_angles == 0 {
            return Err(Error::config("n_angles must be >= 1"));
        }
        if e.m_values.is_empty() {
            return Err(Error::config("m_values must not be empty"));
        }
        if e.m_values.iter().any(|&m| m == 0) {
            return Err(Error::config("ensemble sizes must be >= 1"));
        }
        if !(e.blob_density > 0.0 && e.blob_density < 1.0) {
            return Err(Error::config(format!(
                "blob_density must lie strictly between 0 and 1, got {}",
                e.blob_density
            )));
        }
        if e.output_dir.is_empty() {
            return Err(Error::config("output_dir must not be empty"));
        }
        if !(self.noise.epsilon >= 0.0 && self.noise.epsilon.is_finite()) {
            return Err(Error::config(format!(
                "noise epsilon must be finite and >= 0, got {}",
                self.noise.epsilon
            )));
        }
        if self.initializer.kinds.is_empty() {
            return Err(Error::config("initializer kinds must not be empty"));
        }
        for spec in self.initializer_specs() {
            spec.validate()?;
        }
        self.solver.validate()?;
        if self.stopping.rules.is_empty() {
            return Err(Error::config("stopping rules must not be empty"));
        }
        for policy in self.stopping_policies() {
            let min_m = *e.m_values.iter().min().unwrap();
            policy.validate(min_m)?;
        }
        Ok(())
    }

    /// Expand the initializer section into per-kind specs.
    pub fn initializer_specs(&self) -> Vec<InitializerSpec> {
        self.initializer
            .kinds
            .iter()
            .map(|&kind| InitializerSpec {
                kind,
                theta_grid: self.initializer.theta_grid.clone(),
                inner_iters: self.initializer.inner_iters,
            })
            .collect()
    }

    /// Expand the stopping section into concrete policies.
    pub fn stopping_policies(&self) -> Vec<StoppingPolicy> {
        self.stopping
            .rules
            .iter()
            .map(|&kind| match kind {
                RuleKind::Statistical => {
                    StoppingPolicy::statistical(self.stopping.tau_coeff, self.stopping.tau_exponent)
                }
                RuleKind::Heuristic => StoppingPolicy::heuristic(self.stopping.varrho),
            })
            .collect()
    }

    /// Apply a problem-size preset in place. `ci` caps the image size,
    /// view count, and iteration budgets for fast smoke runs.
    pub fn apply_scale(&mut self, scale: Scale) {
        if scale == Scale::Ci {
            self.experiment.image_size = self.experiment.image_size.min(64);
            self.experiment.n_angles = self.experiment.n_angles.min(30);
            self.solver.max_iters = self.solver.max_iters.min(50);
            self.initializer.inner_iters = self.initializer.inner_iters.min(100);
        }
    }

    pub fn graph(&self) -> &GraphParams {
        &self.solver.graph
    }
}

/// Parse and validate a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let config: ExperimentConfig = toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}
