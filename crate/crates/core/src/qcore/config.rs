//! Hyperparameters shared by the update rules and the training loop.

use crate::approx::Activation;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hyperparameters of a hindsight-regularized Q-learning run.
///
/// Defaults are desk-scale stand-ins for the usual ATARI values: small
/// buffer, short ε decay, fast target sync. Every field can be overridden
/// from the experiment config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HindsightConfig {
    /// Hindsight coefficient δ. Must stay above -1 so the 1/(1+δ) division
    /// in the smoothed reward is defined; negative values are accepted only
    /// for the divergence study.
    pub delta: f64,
    /// Discount factor γ in [0, 1].
    pub gamma: f64,
    /// SGD step size α.
    pub alpha: f64,
    /// Frames between copies of the online net into the target net.
    pub target_sync_period: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Replaces the hindsight update with a plain TD update at step size
    /// α/(1+δ) — the halved-learning-rate baseline.
    pub lr_half_mode: bool,
    /// Hidden layer widths of the Q-network; empty means a single linear
    /// layer (tabular-equivalent on one-hot features).
    pub hidden_widths: Vec<usize>,
    pub activation: Activation,
    /// Any |Q| above this marks the run as diverged.
    pub q_ceiling: f64,
    /// Permits negative δ (the divergence study).
    pub divergence_study: bool,
}

impl Default for HindsightConfig {
    fn default() -> Self {
        Self {
            delta: 1.0,
            gamma: 0.99,
            alpha: 1e-3,
            target_sync_period: 500,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: 10_000,
            batch_size: 32,
            buffer_capacity: 10_000,
            lr_half_mode: false,
            hidden_widths: Vec::new(),
            activation: Activation::Tanh,
            q_ceiling: 1e6,
            divergence_study: false,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("delta must be > -1, got {0}")]
    DeltaOutOfRange(f64),
    #[error("negative delta ({0}) requires the divergence-study flag")]
    NegativeDeltaNotAllowed(f64),
    #[error("gamma must lie in [0, 1], got {0}")]
    GammaOutOfRange(f64),
    #[error("alpha must be positive and finite, got {0}")]
    BadAlpha(f64),
    #[error("{0} must be positive")]
    ZeroField(&'static str),
    #[error("epsilon must lie in [0, 1], got start={start} end={end}")]
    BadEpsilon { start: f64, end: f64 },
    #[error("q_ceiling must be positive, got {0}")]
    BadCeiling(f64),
}

impl HindsightConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.delta > -1.0) {
            return Err(ConfigError::DeltaOutOfRange(self.delta));
        }
        if self.delta < 0.0 && !self.divergence_study {
            return Err(ConfigError::NegativeDeltaNotAllowed(self.delta));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(ConfigError::GammaOutOfRange(self.gamma));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(ConfigError::BadAlpha(self.alpha));
        }
        if self.target_sync_period == 0 {
            return Err(ConfigError::ZeroField("target_sync_period"));
        }
        if self.batch_size == 0 {
            return Err(ConfigError::ZeroField("batch_size"));
        }
        if self.buffer_capacity == 0 {
            return Err(ConfigError::ZeroField("buffer_capacity"));
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return Err(ConfigError::BadEpsilon {
                start: self.epsilon_start,
                end: self.epsilon_end,
            });
        }
        if !(self.q_ceiling > 0.0) {
            return Err(ConfigError::BadCeiling(self.q_ceiling));
        }
        Ok(())
    }
}
