use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cubeshadow_core::linalg::{splitmix64, RngSeed};
use cubeshadow_core::OptimizerConfig;
use serde::{Deserialize, Serialize};

use crate::error::{ExpError, Result};

/// Largest half-dimension the runners accept; Haar sampling and the
/// optimizers are dense and cubic in `2n`.
pub const MAX_HALF_DIM: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Experiment {
    #[serde(rename = "scaling_cUn")]
    ScalingCun,
    #[serde(rename = "scaling_sandwich")]
    ScalingSandwich,
    #[serde(rename = "rare_event")]
    RareEvent,
    #[serde(rename = "concentration")]
    Concentration,
    #[serde(rename = "nets_audit")]
    NetsAudit,
    #[serde(rename = "section_diameter")]
    SectionDiameter,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::ScalingCun,
        Experiment::ScalingSandwich,
        Experiment::RareEvent,
        Experiment::Concentration,
        Experiment::NetsAudit,
        Experiment::SectionDiameter,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::ScalingCun => "scaling_cUn",
            Experiment::ScalingSandwich => "scaling_sandwich",
            Experiment::RareEvent => "rare_event",
            Experiment::Concentration => "concentration",
            Experiment::NetsAudit => "nets_audit",
            Experiment::SectionDiameter => "section_diameter",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ExpError;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| ExpError::Config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = ExpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(ExpError::Config(format!("unknown format `{other}`"))),
        }
    }
}

/// Optimizer tuning as it appears in config files. Random starts are seeded
/// per sample, so there is no seed here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub restarts: usize,
    pub max_iters: usize,
    pub step_init: f64,
    pub step_shrink: f64,
    pub grad_tol: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        Self {
            restarts: d.restarts,
            max_iters: d.max_iters,
            step_init: d.step_init,
            step_shrink: d.step_shrink,
            grad_tol: d.grad_tol,
        }
    }
}

impl OptimizerSettings {
    pub fn with_rng(&self, rng: RngSeed) -> OptimizerConfig {
        OptimizerConfig {
            restarts: self.restarts,
            max_iters: self.max_iters,
            step_init: self.step_init,
            step_shrink: self.step_shrink,
            grad_tol: self.grad_tol,
            rng,
        }
    }
}

fn default_lambda() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n_list: Vec<usize>,
    pub samples_per_n: usize,
    pub seed: u64,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    /// Threshold factor for `rare_event`: a sample counts when the proxy
    /// minimum is at most `λ√n`.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Record wall-clock time per sample. Off by default so that outputs are
    /// byte-for-byte reproducible.
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, n_list: Vec<usize>, samples_per_n: usize, seed: u64) -> Self {
        Self {
            experiment,
            n_list,
            samples_per_n,
            seed,
            optimizer: OptimizerSettings::default(),
            output_path: None,
            format: Format::Csv,
            lambda: default_lambda(),
            record_timing: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ExpError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(ExpError::Config("n_list is empty".into()));
        }
        if let Some(n) = self.n_list.iter().find(|&&n| n < 2) {
            return Err(ExpError::Config(format!("n_list entry {n} is below 2")));
        }
        let mut sorted = self.n_list.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(ExpError::Config("n_list has duplicate entries".into()));
        }
        if self.samples_per_n == 0 {
            return Err(ExpError::Config("samples_per_n must be at least 1".into()));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(ExpError::Config(format!("lambda={} must be positive", self.lambda)));
        }
        self.optimizer
            .with_rng(RngSeed::default())
            .validate()
            .map_err(|e| ExpError::Config(e.to_string()))?;
        if let Some(&n) = self.n_list.iter().find(|&&n| n > MAX_HALF_DIM) {
            return Err(ExpError::Budget(format!(
                "n={n} exceeds the supported maximum {MAX_HALF_DIM}"
            )));
        }
        Ok(())
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// 64-bit seed for one sample, a hash of `(master, experiment, n, index)`.
/// It does not depend on the order in which samples are run.
pub fn derive_seed(master: u64, experiment: &str, n: usize, sample_index: usize) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ fnv1a(experiment.as_bytes()));
    h = splitmix64(h ^ n as u64);
    splitmix64(h ^ sample_index as u64)
}
