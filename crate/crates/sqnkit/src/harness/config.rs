//! Experiment configuration: a declarative TOML file plus CLI overrides.
//!
//! ```toml
//! out_dir = "runs/demo"
//! seeds = [1, 2, 3]
//! eval_every = 10
//! lambda = 1e-4
//!
//! [problem]
//! kind = "synthetic"      # or "dataset"
//! n = 500
//! train_size = 10000
//! test_size = 5000
//! density = 0.05
//! seed = 7
//!
//! [[algorithm]]
//! name = "sdlbfgs-p10"    # optional label, defaults to the kind
//! kind = "sdlbfgs"        # sgd | sdlbfgs | svrg | sdlbfgs-vr
//! batch_size = 100
//! memory = 10
//! max_iters = 1000
//! step = { kind = "diminishing", base = 10.0 }
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::SamplingPolicy;
use crate::solvers::{
    GammaMode, SolverConfig, StepSchedule, VrConfig, VrCurvatureSource,
};

/// Where the benchmark data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemSpec {
    /// Planted-hyperplane sparse data drawn from a seeded generator.
    Synthetic {
        n: usize,
        train_size: usize,
        test_size: usize,
        density: f64,
        seed: u64,
    },
    /// Sparse text files; `test` missing means a seeded split of `train`.
    Dataset {
        train: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        test: Option<PathBuf>,
        #[serde(default = "default_split")]
        split: f64,
        #[serde(default)]
        split_seed: u64,
    },
}

fn default_split() -> f64 {
    0.6
}

/// Solver family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmKind {
    /// Plain mini-batch SGD (identity operator).
    Sgd,
    /// Stochastic damped L-BFGS.
    Sdlbfgs,
    /// Variance-reduced baseline with identity operator.
    Svrg,
    /// Variance-reduced stochastic damped L-BFGS.
    SdlbfgsVr,
}

impl AlgorithmKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmKind::Sgd => "sgd",
            AlgorithmKind::Sdlbfgs => "sdlbfgs",
            AlgorithmKind::Svrg => "svrg",
            AlgorithmKind::SdlbfgsVr => "sdlbfgs-vr",
        }
    }

    pub fn is_variance_reduced(&self) -> bool {
        matches!(self, AlgorithmKind::Svrg | AlgorithmKind::SdlbfgsVr)
    }
}

fn default_delta() -> f64 {
    0.01
}

fn default_initial_gamma() -> f64 {
    1.0
}

fn default_sampling() -> SamplingPolicy {
    SamplingPolicy::WithoutReplacement
}

fn default_vr_y_mode() -> VrCurvatureSource {
    VrCurvatureSource::ReuseVr
}

/// One algorithm entry from the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: AlgorithmKind,
    pub batch_size: usize,
    #[serde(default)]
    pub memory: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub step: StepSchedule,
    /// Iterations for sgd/sdlbfgs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<u64>,
    /// Outer epochs for the variance-reduced kinds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<u64>,
    /// Inner steps per epoch for the variance-reduced kinds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_iters: Option<u64>,
    #[serde(default = "default_sampling")]
    pub sampling: SamplingPolicy,
    #[serde(default = "default_initial_gamma")]
    pub initial_gamma: f64,
    #[serde(default = "default_vr_y_mode")]
    pub vr_y_mode: VrCurvatureSource,
}

impl AlgorithmSpec {
    /// Unique label used in output file names.
    pub fn label(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.kind.as_str().to_string())
    }

    fn validate(&self) -> Result<()> {
        let label = self.label();
        if label.is_empty()
            || !label
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(Error::Config(format!(
                "algorithm label {label:?} must be nonempty [A-Za-z0-9_-]"
            )));
        }
        if self.kind.is_variance_reduced() {
            if self.epochs.is_none() || self.inner_iters.is_none() {
                return Err(Error::Config(format!(
                    "{label}: variance-reduced algorithms need epochs and inner_iters"
                )));
            }
        } else if self.max_iters.is_none() {
            return Err(Error::Config(format!("{label}: max_iters is required")));
        }
        if matches!(self.kind, AlgorithmKind::Sgd | AlgorithmKind::Svrg) && self.memory != 0 {
            return Err(Error::Config(format!(
                "{label}: {} always runs with memory 0",
                self.kind.as_str()
            )));
        }
        Ok(())
    }

    /// Expands the entry into a runnable solver configuration.
    pub fn solver_config(&self, seed: u64, eval_every: u64) -> Result<SolverConfig> {
        self.validate()?;
        let gamma_mode = match self.kind {
            AlgorithmKind::Sgd | AlgorithmKind::Svrg => GammaMode::Fixed { gamma: 1.0 },
            AlgorithmKind::Sdlbfgs | AlgorithmKind::SdlbfgsVr => GammaMode::Adaptive,
        };
        let vr = if self.kind.is_variance_reduced() {
            Some(VrConfig {
                epochs: self.epochs.unwrap(),
                inner_iters: self.inner_iters.unwrap(),
                y_mode: self.vr_y_mode,
            })
        } else {
            None
        };
        let config = SolverConfig {
            batch_size: self.batch_size,
            memory: self.memory,
            delta: self.delta,
            schedule: self.step.clone(),
            max_iters: self.max_iters.unwrap_or(1),
            seed,
            eval_every,
            sampling: self.sampling,
            initial_gamma: self.initial_gamma,
            gamma_mode,
            initial_iterate: None,
            vr,
        };
        config.validate()?;
        Ok(config)
    }
}

fn default_eval_every() -> u64 {
    10
}

fn default_lambda() -> f64 {
    1e-4
}

/// A full experiment: problem, algorithm grid, seeds, output location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub out_dir: PathBuf,
    pub seeds: Vec<u64>,
    #[serde(default = "default_eval_every")]
    pub eval_every: u64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    pub problem: ProblemSpec,
    #[serde(rename = "algorithm")]
    pub algorithms: Vec<AlgorithmSpec>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::Config("at least one algorithm is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be at least 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "lambda must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        let mut labels: Vec<String> = self.algorithms.iter().map(|a| a.label()).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != self.algorithms.len() {
            return Err(Error::Config("algorithm labels must be unique".into()));
        }
        for algo in &self.algorithms {
            algo.validate()?;
        }
        if let ProblemSpec::Synthetic {
            n,
            train_size,
            test_size,
            density,
            ..
        } = &self.problem
        {
            if *n == 0 || *train_size == 0 || *test_size == 0 {
                return Err(Error::Config(
                    "synthetic n, train_size, test_size must be at least 1".into(),
                ));
            }
            if !(*density > 0.0 && *density <= 1.0) {
                return Err(Error::Config(format!(
                    "density must lie in (0, 1], got {density}"
                )));
            }
        }
        Ok(())
    }
}

/// Parses a config file's text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig =
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Serializes a config back to TOML; `parse_config` of the output yields an
/// equal config.
pub fn serialize_config(config: &ExperimentConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| Error::Config(e.to_string()))
}

pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Data {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}

/// CLI values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seeds: Vec<u64>,
    pub out_dir: Option<PathBuf>,
    pub algorithms: Vec<String>,
    pub eval_every: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, mut config: ExperimentConfig) -> Result<ExperimentConfig> {
        if !self.seeds.is_empty() {
            config.seeds = self.seeds.clone();
        }
        if let Some(out) = &self.out_dir {
            config.out_dir = out.clone();
        }
        if let Some(every) = self.eval_every {
            config.eval_every = every;
        }
        if !self.algorithms.is_empty() {
            let known: Vec<String> = config.algorithms.iter().map(|a| a.label()).collect();
            for wanted in &self.algorithms {
                if !known.contains(wanted) {
                    return Err(Error::Config(format!(
                        "unknown algorithm name {wanted:?}; configured: {known:?}"
                    )));
                }
            }
            config
                .algorithms
                .retain(|a| self.algorithms.contains(&a.label()));
        }
        config.validate()?;
        Ok(config)
    }
}
