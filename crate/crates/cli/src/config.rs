//! Run configuration, read from TOML and validated before any computation.

use std::path::{Path, PathBuf};

use doublewell::environment::{CorrelationModel, Matrix4c};
use doublewell::evolution::{uniform_grid, Method};
use doublewell::fockspace::{fock_state, DensityMatrix, FockBasis};
use doublewell::model::ModelParams;
use doublewell::stochastic::NoiseConfig;
use doublewell::C64;
use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    SlopeWeak,
    SlopeSingular,
    EvolveWeak,
    EvolveSingular,
    Unravel,
    CompareAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvironmentKind {
    Exponential,
    Delta,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(rename = "T")]
    pub tunneling: f64,
    #[serde(rename = "U")]
    pub interaction: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSection {
    pub n_max: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// Bosons per well of the Mott state `|N,N>`.
    #[serde(rename = "N")]
    pub filling: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSection {
    pub kind: EnvironmentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(rename = "G_re")]
    pub g_re: [[f64; 4]; 4],
    #[serde(rename = "G_im", default, skip_serializing_if = "Option::is_none")]
    pub g_im: Option<[[f64; 4]; 4]>,
    #[serde(default)]
    pub lamb_shift: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_method")]
    pub method: Method,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            t_max: default_t_max(),
            points: default_points(),
            method: default_method(),
        }
    }
}

fn default_t_max() -> f64 {
    1.0
}

fn default_points() -> usize {
    11
}

fn default_method() -> Method {
    Method::ExpProp
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub dt: f64,
    pub trajectories: usize,
    #[serde(default = "all_channels")]
    pub channels: [bool; 4],
    #[serde(default = "yes")]
    pub dt_check: bool,
    /// In standard errors of the final mean current.
    #[serde(default = "one")]
    pub dt_check_tolerance: f64,
}

fn all_channels() -> [bool; 4] {
    [true; 4]
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_scenario")]
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSection,
    pub basis: BasisSection,
    pub initial: InitialSection,
    pub environment: EnvironmentSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    /// Not echoed into reports, so that outputs do not depend on where they
    /// are written.
    #[serde(default, skip_serializing)]
    pub output: OutputSection,
}

fn default_scenario() -> Scenario {
    Scenario::CompareAll
}

/// A config file parsed and checked, with its text kept for provenance.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub text: String,
    pub config: RunConfig,
}

impl LoadedConfig {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(text).map_err(|e| match e {
            CliError::Validation(msg) => CliError::Validation(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: String) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(&text).map_err(|e| CliError::Validation(e.to_string()))?;
        config.validate()?;
        Ok(Self { text, config })
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.params()?;
        let basis = self.basis()?;
        let n = self.initial.filling;
        if n < 1 || n + 1 > basis.n_max() {
            return Err(CliError::Validation(format!(
                "initial.N = {n} must satisfy 1 <= N <= n_max - 1 (n_max = {})",
                basis.n_max()
            )));
        }
        self.strengths()?;
        match self.environment.kind {
            EnvironmentKind::Exponential => {
                self.exponential_model()?;
            }
            EnvironmentKind::Delta => {
                self.delta_model()?;
            }
        }
        self.grid()?;
        if self.noise.is_some() {
            self.noise_config()?;
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        let m = &self.model;
        Ok(ModelParams::new(m.tunneling, m.interaction, m.eps1, m.eps2, m.lambda)?)
    }

    pub fn basis(&self) -> Result<FockBasis, CliError> {
        Ok(FockBasis::new(self.basis.n_max)?)
    }

    pub fn initial_state(&self) -> Result<DensityMatrix, CliError> {
        let n = self.initial.filling;
        Ok(fock_state(&self.basis()?, n, n)?)
    }

    pub fn strengths(&self) -> Result<Matrix4c, CliError> {
        let im = self.environment.g_im.unwrap_or([[0.0; 4]; 4]);
        Ok(Matrix4c::from_fn(|i, j| C64::new(self.environment.g_re[i][j], im[i][j])))
    }

    pub fn mu(&self) -> Result<f64, CliError> {
        self.environment
            .mu
            .ok_or_else(|| CliError::Validation("environment.mu is required for the weak-coupling limit".into()))
    }

    pub fn exponential_model(&self) -> Result<CorrelationModel, CliError> {
        Ok(CorrelationModel::exponential(self.strengths()?, self.mu()?)?)
    }

    pub fn delta_model(&self) -> Result<CorrelationModel, CliError> {
        Ok(CorrelationModel::delta_hermitian(self.strengths()?)?)
    }

    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        Ok(uniform_grid(self.time.t_max, self.time.points)?)
    }

    pub fn noise_config(&self) -> Result<NoiseConfig, CliError> {
        let section = self
            .noise
            .as_ref()
            .ok_or_else(|| CliError::Validation("the [noise] section is required for unraveling".into()))?;
        if self.environment.g_im.is_some_and(|im| im.iter().flatten().any(|&x| x != 0.0)) {
            return Err(CliError::Validation(
                "white-noise covariance must be real: G_im has nonzero entries".into(),
            ));
        }
        let g = Matrix4::from_fn(|i, j| self.environment.g_re[i][j]);
        let noise = NoiseConfig {
            g,
            dt: section.dt,
            seed: self.seed,
            trajectories: section.trajectories,
            channels: section.channels,
            dt_check: section.dt_check.then_some(section.dt_check_tolerance),
        };
        noise.validate()?;
        Ok(noise)
    }
}
