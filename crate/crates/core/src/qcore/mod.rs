//! Learning rules: transitions, the replay buffer with behavior-time action
//! values, bootstrapped targets, the hindsight loss, and the update rules.

mod buffer;
mod config;
mod loss;
mod targets;
mod update;

pub use buffer::{buffer_push, buffer_sample, BufferError, HindsightBuffer};
pub use config::{ConfigError, HindsightConfig};
pub use loss::{hindsight_loss, hindsight_loss_grad_q, smoothed_reward};
pub use targets::{ddqn_target, dqn_target};
pub use update::{sgd_update, tabular_update, td_update, QTable, UpdateError};

/// One stored experience. Besides the usual SARS fields it records
/// `behavior_q`, the online network's value of the executed action at the
/// moment it was taken — the anchor of the hindsight term.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub next_state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub terminal: bool,
    pub behavior_q: f64,
}

impl Transition {
    pub fn new(
        state: Vec<f64>,
        next_state: Vec<f64>,
        action: usize,
        reward: f64,
        terminal: bool,
        behavior_q: f64,
    ) -> Self {
        debug_assert!(behavior_q.is_finite(), "behavior_q must be finite");
        Self { state, next_state, action, reward, terminal, behavior_q }
    }
}

/// First index attaining the maximum; ties break toward the lowest action.
pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
