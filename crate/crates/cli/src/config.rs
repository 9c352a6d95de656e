//! Run configuration: a single TOML file describing one experiment.

use crate::CliError;
use hindsight_core::envs::EnvSpec;
use hindsight_core::overest::Method;
use hindsight_core::qcore::HindsightConfig;
use hindsight_core::trainer::BaseAlgorithm;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Train,
    Overest,
    NoiseBound,
    DeltaSweep,
}

impl Experiment {
    pub fn label(self) -> &'static str {
        match self {
            Experiment::Train => "train",
            Experiment::Overest => "overest",
            Experiment::NoiseBound => "noise_bound",
            Experiment::DeltaSweep => "delta_sweep",
        }
    }
}

/// Base algorithm plus the hindsight on/off switch of one training agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSpec {
    pub base: BaseAlgorithm,
    #[serde(default = "default_true")]
    pub hindsight: bool,
}

impl VariantSpec {
    pub fn label(&self) -> String {
        let base = match self.base {
            BaseAlgorithm::Dqn => "dqn",
            BaseAlgorithm::Ddqn => "ddqn",
            BaseAlgorithm::Duel => "duel",
        };
        if self.hindsight {
            format!("{base}_h")
        } else {
            base.to_string()
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub frames: usize,
    pub eval_interval: usize,
    pub eval_episodes: usize,
    pub eval_epsilon: f64,
    pub eval_max_steps: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            frames: 20_000,
            eval_interval: 1000,
            eval_episodes: 5,
            eval_epsilon: 0.001,
            eval_max_steps: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverestSection {
    pub rounds: usize,
    pub methods: Vec<Method>,
}

impl Default for OverestSection {
    fn default() -> Self {
        Self { rounds: 20, methods: vec![Method::Dqn, Method::DqnH, Method::Ddqn, Method::DdqnH] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub m: usize,
    pub epsilon: f64,
    pub gamma: f64,
    pub trials: usize,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { m: 10, epsilon: 1.0, gamma: 1.0, trials: 1_000_000 }
    }
}

/// One experiment: which study to run, over which environment, variants,
/// δ values, and seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    /// Output directory; `--out` overrides, `runs/<experiment>` is the
    /// fallback. Not part of the config hash.
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub env: Option<EnvSpec>,
    #[serde(default = "default_variants")]
    pub variants: Vec<VariantSpec>,
    /// Training hyperparameters; `delta` and `divergence_study` are filled
    /// per cell.
    #[serde(default)]
    pub config: HindsightConfig,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub overest: OverestSection,
    #[serde(default)]
    pub noise: NoiseSection,
}

fn default_deltas() -> Vec<f64> {
    vec![1.0]
}

fn default_variants() -> Vec<VariantSpec> {
    vec![VariantSpec { base: BaseAlgorithm::Dqn, hindsight: true }]
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Structural validation; `allow_divergence_study` comes from the CLI
    /// flag and unlocks negative δ values.
    pub fn validate(&self, allow_divergence_study: bool) -> Result<(), CliError> {
        if self.seeds.is_empty() {
            return Err(CliError::Config("at least one seed is required".into()));
        }
        let divergence = allow_divergence_study || self.config.divergence_study;
        for &d in &self.deltas {
            if !(d > -1.0) {
                return Err(CliError::Config(format!("delta {d} must be > -1")));
            }
            if d < 0.0 && !divergence {
                return Err(CliError::Config(format!(
                    "delta {d} is negative; pass --allow-divergence-study to run it"
                )));
            }
        }
        match self.experiment {
            Experiment::Train | Experiment::DeltaSweep => {
                let env = self.env.as_ref().ok_or_else(|| {
                    CliError::Config("training experiments need an [env] section".into())
                })?;
                if env.build_tabular().is_none() {
                    return Err(CliError::Config(
                        "training experiments need a tabular env (chain or gridworld)".into(),
                    ));
                }
                if self.variants.is_empty() {
                    return Err(CliError::Config("at least one variant is required".into()));
                }
                if self.train.frames == 0 {
                    return Err(CliError::Config("train.frames must be positive".into()));
                }
                let mut probe = self.config.clone();
                probe.divergence_study = divergence;
                probe.delta = *self.deltas.first().unwrap();
                probe.validate().map_err(|e| CliError::Config(e.to_string()))?;
            }
            Experiment::Overest => {
                if let Some(env) = &self.env {
                    if env.build_function_estimation().is_none() {
                        return Err(CliError::Config(
                            "the overestimation study needs a function_estimation env".into(),
                        ));
                    }
                }
                if self.overest.rounds == 0 {
                    return Err(CliError::Config("overest.rounds must be positive".into()));
                }
                if self.overest.methods.is_empty() {
                    return Err(CliError::Config("overest.methods must not be empty".into()));
                }
            }
            Experiment::NoiseBound => {
                if self.noise.trials == 0 {
                    return Err(CliError::Config("noise.trials must be positive".into()));
                }
                if self.noise.m == 0 {
                    return Err(CliError::Config("noise.m must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical (JSON) form of the parsed config with the
    /// output directory stripped. Stable under key reordering in the TOML
    /// source and under different --out targets.
    pub fn content_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = None;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
