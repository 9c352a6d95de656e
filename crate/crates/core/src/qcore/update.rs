//! Parameter and tabular update rules.

use super::{argmax_first, smoothed_reward, HindsightConfig, Transition};
use crate::approx::QModel;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum UpdateError {
    #[error("non-finite {what} encountered during an update")]
    NonFinite { what: &'static str },
}

/// A dense state × action value table.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        assert!(n_states > 0 && n_actions > 0);
        Self { n_states, n_actions, values: vec![0.0; n_states * n_actions] }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.n_actions + action]
    }

    pub fn set(&mut self, state: usize, action: usize, value: f64) {
        self.values[state * self.n_actions + action] = value;
    }

    pub fn max_over_actions(&self, state: usize) -> f64 {
        self.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Greedy action with ties broken toward the lowest index.
    pub fn greedy_action(&self, state: usize) -> usize {
        argmax_first(self.row(state))
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.n_actions..(state + 1) * self.n_actions]
    }
}

/// One gradient step toward `target` on Q(s, a):
/// `θ ← θ + step · (target − Q(s,a;θ)) · ∇θ Q(s,a;θ)`.
fn scaled_gradient_step(
    model: &mut QModel,
    t: &Transition,
    target: f64,
    step: f64,
) -> Result<(), UpdateError> {
    if !target.is_finite() {
        return Err(UpdateError::NonFinite { what: "target" });
    }
    let q = model.action_values(&t.state)[t.action];
    if !q.is_finite() {
        return Err(UpdateError::NonFinite { what: "action value" });
    }
    let grad = model.grad_action(&t.state, t.action);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(UpdateError::NonFinite { what: "gradient" });
    }
    model.apply_scaled_delta(&grad, step * (target - q));
    Ok(())
}

/// Plain TD step at step size `alpha` — the hindsight-free update path.
pub fn td_update(
    model: &mut QModel,
    t: &Transition,
    y_hat: f64,
    alpha: f64,
) -> Result<(), UpdateError> {
    scaled_gradient_step(model, t, y_hat, alpha)
}

/// Hindsight update: a TD step toward the smoothed reward
/// `r_new = (ŷ + δ·ȳ)/(1+δ)` with ȳ taken from the stored transition.
///
/// With `lr_half_mode` set the update instead reproduces the
/// halved-learning-rate baseline: a plain TD step toward ŷ at step size
/// α/(1+δ), no hindsight term.
pub fn sgd_update(
    model: &mut QModel,
    t: &Transition,
    y_hat: f64,
    config: &HindsightConfig,
) -> Result<(), UpdateError> {
    if config.lr_half_mode {
        return scaled_gradient_step(model, t, y_hat, config.alpha / (1.0 + config.delta));
    }
    let r_new = smoothed_reward(y_hat, t.behavior_q, config.delta);
    scaled_gradient_step(model, t, r_new, config.alpha)
}

/// Tabular value update with the smoothed reward as target:
///
/// ```text
/// Q(s,a) ← (1-α)·Q(s,a) + α/(1+δ) · (r + γ·max_b Q(s',b) + δ·behavior_q)
/// ```
///
/// With δ = 0 this is exactly the classical one-step Q-learning update.
pub fn tabular_update(
    table: &mut QTable,
    state: usize,
    action: usize,
    next_state: usize,
    reward: f64,
    behavior_q: f64,
    config: &HindsightConfig,
) {
    let current = table.get(state, action);
    let bootstrap = reward + config.gamma * table.max_over_actions(next_state);
    let updated = (1.0 - config.alpha) * current
        + config.alpha / (1.0 + config.delta) * (bootstrap + config.delta * behavior_q);
    table.set(state, action, updated);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::{Activation, MlpSpec, ParamVector};
    use proptest::prelude::*;

    fn linear_model(weight: f64) -> QModel {
        // Q(s) = w*s + b over a single action.
        let spec = MlpSpec::new(vec![1, 1], Activation::Identity);
        let layout = spec.layout();
        let mut params = ParamVector::zeros(spec.param_count());
        params.as_mut_slice()[layout.weight_index(0, 0, 0)] = weight;
        QModel::Mlp { spec, params }
    }

    fn transition(state: f64, behavior_q: f64) -> Transition {
        Transition::new(vec![state], vec![state], 0, 0.0, false, behavior_q)
    }

    #[test]
    fn zero_alpha_leaves_params_unchanged() {
        let mut model = linear_model(1.0);
        let before = model.flat_params();
        let cfg = HindsightConfig { alpha: 0.0, ..Default::default() };
        sgd_update(&mut model, &transition(2.0, 0.0), 123.0, &cfg).unwrap();
        assert_eq!(before, model.flat_params());
    }

    #[test]
    fn zero_residual_leaves_params_unchanged() {
        let mut model = linear_model(1.5);
        let before = model.flat_params();
        let q = model.action_values(&[3.0])[0];
        // y_hat = behavior_q = q makes r_new = q exactly.
        let t = transition(3.0, q);
        let cfg = HindsightConfig { delta: 1.0, alpha: 0.25, ..Default::default() };
        sgd_update(&mut model, &t, q, &cfg).unwrap();
        assert_eq!(before, model.flat_params());
    }

    #[test]
    fn hand_evaluated_linear_step() {
        // Q(s)=w·s, s=2, w=1, r_new=5, α=0.1:  w ← 1 + 0.1·(5-2)·2 = 1.6
        let mut model = linear_model(1.0);
        let t = transition(2.0, 5.0); // behavior_q = 5
        let cfg = HindsightConfig { delta: 0.0, alpha: 0.1, ..Default::default() };
        // δ=0 so r_new = ŷ = 5.
        sgd_update(&mut model, &t, 5.0, &cfg).unwrap();
        let spec = MlpSpec::new(vec![1, 1], Activation::Identity);
        let w = model.flat_params()[spec.layout().weight_index(0, 0, 0)];
        assert_eq!(w, 1.6);
    }

    #[test]
    fn lr_half_mode_is_a_plain_td_step_at_scaled_alpha() {
        let t = transition(2.0, -100.0); // behavior_q must be ignored
        let cfg = HindsightConfig {
            delta: 1.0,
            alpha: 0.2,
            lr_half_mode: true,
            ..Default::default()
        };
        let mut a = linear_model(1.0);
        sgd_update(&mut a, &t, 5.0, &cfg).unwrap();
        let mut b = linear_model(1.0);
        td_update(&mut b, &t, 5.0, 0.2 / 2.0).unwrap();
        assert_eq!(a.flat_params(), b.flat_params());
    }

    #[test]
    fn non_finite_target_is_rejected() {
        let mut model = linear_model(1.0);
        let t = transition(1.0, 0.0);
        let cfg = HindsightConfig::default();
        assert_eq!(
            sgd_update(&mut model, &t, f64::INFINITY, &cfg),
            Err(UpdateError::NonFinite { what: "target" })
        );
    }

    #[test]
    fn tabular_full_replacement() {
        // α=1, δ=0, γ=0: Q(s,a) ← r.
        let mut table = QTable::new(2, 2);
        table.set(0, 1, 9.0);
        let cfg = HindsightConfig { alpha: 1.0, delta: 0.0, gamma: 0.0, ..Default::default() };
        tabular_update(&mut table, 0, 1, 1, 4.5, 0.0, &cfg);
        assert_eq!(table.get(0, 1), 4.5);
    }

    #[test]
    fn tabular_zero_alpha_is_identity() {
        let mut table = QTable::new(2, 2);
        table.set(1, 0, -3.0);
        let before = table.clone();
        let cfg = HindsightConfig { alpha: 0.0, ..Default::default() };
        tabular_update(&mut table, 1, 0, 0, 10.0, 10.0, &cfg);
        assert_eq!(table, before);
    }

    #[test]
    fn tabular_hand_evaluation() {
        // α=0.5, δ=1, γ=0.9, Q(s,a)=2, behavior_q=2, r=1, max_b Q(s',b)=4
        //   → 0.5·2 + 0.25·(1 + 3.6 + 2) = 2.65
        let mut table = QTable::new(2, 2);
        table.set(0, 0, 2.0);
        table.set(1, 0, 4.0);
        table.set(1, 1, 1.0);
        let cfg = HindsightConfig { alpha: 0.5, delta: 1.0, gamma: 0.9, ..Default::default() };
        tabular_update(&mut table, 0, 0, 1, 1.0, 2.0, &cfg);
        assert!((table.get(0, 0) - 2.65).abs() < 1e-12);
    }

    /// Classical one-step Q-learning update, written independently for the
    /// δ=0 reduction check.
    fn watkins_update(table: &mut QTable, s: usize, a: usize, s2: usize, r: f64, alpha: f64, gamma: f64) {
        let target = r + gamma * table.max_over_actions(s2);
        let updated = (1.0 - alpha) * table.get(s, a) + alpha * target;
        table.set(s, a, updated);
    }

    proptest! {
        // δ=0 reduces the tabular rule to the classical update bit-for-bit.
        #[test]
        fn prop_delta_zero_matches_watkins_bitwise(
            q0 in -10.0f64..10.0,
            qn in proptest::collection::vec(-10.0f64..10.0, 3),
            r in -5.0f64..5.0,
            bq in -10.0f64..10.0,
            alpha in 0.0f64..1.0,
            gamma in 0.0f64..1.0,
        ) {
            let mut a = QTable::new(2, 3);
            a.set(0, 1, q0);
            for (i, &v) in qn.iter().enumerate() {
                a.set(1, i, v);
            }
            let mut b = a.clone();
            let cfg = HindsightConfig { alpha, gamma, delta: 0.0, ..Default::default() };
            tabular_update(&mut a, 0, 1, 1, r, bq, &cfg);
            watkins_update(&mut b, 0, 1, 1, r, alpha, gamma);
            prop_assert_eq!(a.get(0, 1).to_bits(), b.get(0, 1).to_bits());
        }

        // Raising behavior_q strictly raises the updated value when α, δ > 0.
        #[test]
        fn prop_monotone_in_behavior_q(
            q0 in -10.0f64..10.0,
            r in -5.0f64..5.0,
            bq in -10.0f64..10.0,
            bump in 0.1f64..5.0,
            alpha in 0.05f64..1.0,
            delta in 0.1f64..3.0,
        ) {
            let cfg = HindsightConfig { alpha, delta, gamma: 0.9, ..Default::default() };
            let mut lo = QTable::new(2, 2);
            lo.set(0, 0, q0);
            let mut hi = lo.clone();
            tabular_update(&mut lo, 0, 0, 1, r, bq, &cfg);
            tabular_update(&mut hi, 0, 0, 1, r, bq + bump, &cfg);
            prop_assert!(hi.get(0, 0) > lo.get(0, 0));
        }
    }
}
