//! JSON run configurations. Unknown keys are rejected so typos surface as
//! schema errors, and every seed has an explicit deterministic default.

use serde::{Deserialize, Serialize};

use ratefront_core::boltzmann::conjugate::{ConjugateFamily, InferenceMode, PairedData};
use ratefront_core::functionals::MultiplierSetting;
use ratefront_core::trainer::{DataSpec, OptimizerKind, TrainConfig};

fn default_target_rate() -> f64 {
    0.5
}
fn default_steps() -> usize {
    10_000
}
fn default_lr() -> f64 {
    1e-3
}
fn default_optimizer() -> OptimizerKind {
    OptimizerKind::Adam
}
fn default_data() -> DataSpec {
    DataSpec::Infinite
}
fn default_m_noise() -> usize {
    8
}
fn default_record_every() -> usize {
    500
}
fn default_k() -> usize {
    20
}
fn default_n_random() -> usize {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainRunConfig {
    #[serde(default = "default_target_rate")]
    pub target_rate: f64,
    pub setting: MultiplierSetting,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerKind,
    #[serde(default = "default_data")]
    pub data: DataSpec,
    #[serde(default = "default_m_noise")]
    pub m_noise: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

impl TrainRunConfig {
    pub fn to_train_config(&self) -> TrainConfig {
        TrainConfig {
            setting: self.setting,
            steps: self.steps,
            learning_rate: self.learning_rate,
            optimizer: self.optimizer,
            data: self.data,
            m_noise: self.m_noise,
            seed: self.seed,
            record_every: self.record_every,
        }
    }
}

/// Either an explicit list of settings or a cartesian product of axes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub settings: Vec<MultiplierSetting>,
    #[serde(default)]
    pub rho: Vec<f64>,
    #[serde(default)]
    pub delta: Vec<f64>,
    #[serde(default)]
    pub gamma: Vec<f64>,
    #[serde(default)]
    pub sigma: Vec<f64>,
}

impl GridSpec {
    pub fn expand(&self) -> Result<Vec<MultiplierSetting>, String> {
        if !self.settings.is_empty() {
            if !(self.rho.is_empty()
                && self.delta.is_empty()
                && self.gamma.is_empty()
                && self.sigma.is_empty())
            {
                return Err("give either `settings` or axis lists, not both".into());
            }
            return Ok(self.settings.clone());
        }
        let one = vec![1.0];
        let rho = if self.rho.is_empty() { &one } else { &self.rho };
        let delta = if self.delta.is_empty() { &one } else { &self.delta };
        let gamma = if self.gamma.is_empty() { &one } else { &self.gamma };
        let sigma = if self.sigma.is_empty() { &one } else { &self.sigma };
        let mut out = Vec::new();
        for &r in rho {
            for &d in delta {
                for &g in gamma {
                    for &s in sigma {
                        out.push(MultiplierSetting {
                            rho: r,
                            delta: d,
                            gamma: g,
                            sigma: s,
                        });
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRunConfig {
    #[serde(default = "default_target_rate")]
    pub target_rate: f64,
    pub grid: GridSpec,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerKind,
    #[serde(default = "default_data")]
    pub data: DataSpec,
    #[serde(default = "default_m_noise")]
    pub m_noise: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Write a params checkpoint per grid point.
    #[serde(default)]
    pub save_checkpoints: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitySpec {
    pub d_band: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxwellRunConfig {
    pub sweep: SweepRunConfig,
    #[serde(default = "default_k")]
    pub k_neighbors: usize,
    /// Relation ids to check; empty means all implemented relations.
    #[serde(default)]
    pub relations: Vec<String>,
    #[serde(default)]
    pub capacity: Option<CapacitySpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub param_index: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        (0..self.count)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GridSource {
    /// Energies from the toy model with the listed parameters free.
    ModelSlice {
        #[serde(default = "default_target_rate")]
        target_rate: f64,
        axes: Vec<AxisSpec>,
        rho: f64,
        delta: f64,
        gamma: f64,
        #[serde(default)]
        base_seed: u64,
    },
    /// Synthetic energies supplied directly.
    Energies {
        shape: Vec<usize>,
        energy: Vec<f64>,
        #[serde(default)]
        prior: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoltzmannRunConfig {
    pub grid: GridSource,
    pub sigma: f64,
    #[serde(default = "default_steps")]
    pub relax_steps: usize,
    #[serde(default = "default_n_random")]
    pub n_random: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesRunConfig {
    pub prior: ConjugateFamily,
    pub mode: InferenceMode,
    pub betas: Vec<f64>,
    pub data: PairedData,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZooRunConfig {
    #[serde(default = "default_target_rate")]
    pub target_rate: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerKind,
    #[serde(default = "default_data")]
    pub data: DataSpec,
    #[serde(default = "default_m_noise")]
    pub m_noise: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}
