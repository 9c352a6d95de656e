//! The deterministic function-estimation setting: a continuous real-valued
//! state space with 10 discrete actions sharing one true value function.
//!
//! Each action sees the true values at the integer states -6..6, except for
//! one pair of adjacent states removed from its view: action 0 is missing
//! states -5 and -4, action 1 is missing -4 and -3, and so on — ten shifted
//! adjacent pairs. The endpoints ±6 are never removed, which anchors
//! degree-6 fits at the domain boundary.

use serde::{Deserialize, Serialize};

/// The true action value Q*(s, a), identical across actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrueValue {
    /// Q*(s, a) = sin(s)
    Sine,
    /// Q*(s, a) = 2·exp(-s²)
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionEstimationEnv {
    pub n_actions: usize,
    pub true_value: TrueValue,
    /// Integer sample grid (before per-action removal).
    pub sample_states: Vec<i32>,
    /// Per-action pair of adjacent missing states.
    pub removed_pairs: Vec<(i32, i32)>,
    /// Dense evaluation grid for bias curves.
    pub eval_grid: Vec<f64>,
}

impl FunctionEstimationEnv {
    /// The default setting: integer states -6..6, eval grid [-6, 6] at step
    /// 0.02, ten actions with removal pairs starting at (-5, -4).
    pub fn new(true_value: TrueValue) -> Self {
        let n_actions = 10;
        let sample_states: Vec<i32> = (-6..=6).collect();
        let removed_pairs: Vec<(i32, i32)> =
            (0..n_actions as i32).map(|a| (-5 + a, -4 + a)).collect();
        let eval_grid: Vec<f64> = (0..=600).map(|i| -6.0 + 0.02 * i as f64).collect();
        let env = Self { n_actions, true_value, sample_states, removed_pairs, eval_grid };
        env.assert_invariants();
        env
    }

    fn assert_invariants(&self) {
        assert_eq!(self.removed_pairs.len(), self.n_actions);
        for &(a, b) in &self.removed_pairs {
            assert_eq!(b, a + 1, "removed states must be adjacent");
            assert!(self.sample_states.contains(&a) && self.sample_states.contains(&b));
        }
    }

    /// Q*(state): `sin(state)` or `2·exp(-state²)`, action-independent.
    pub fn true_value(&self, state: f64) -> f64 {
        match self.true_value {
            TrueValue::Sine => state.sin(),
            TrueValue::Gaussian => 2.0 * (-state * state).exp(),
        }
    }

    /// All sample states visible to an action, i.e. the integer grid minus
    /// the action's removed pair.
    pub fn states_for_action(&self, action: usize) -> Vec<f64> {
        assert!(action < self.n_actions, "action index out of range");
        let (r0, r1) = self.removed_pairs[action];
        self.sample_states
            .iter()
            .filter(|&&s| s != r0 && s != r1)
            .map(|&s| s as f64)
            .collect()
    }

    /// `(state, Q*(state))` pairs at the action's visible sample states.
    pub fn sample_set(&self, action: usize) -> Vec<(f64, f64)> {
        self.states_for_action(action)
            .into_iter()
            .map(|s| (s, self.true_value(s)))
            .collect()
    }

    /// Integer sample states with several removal pairs applied at once;
    /// the decoupled study draws its reduced subsets this way. Endpoints
    /// survive every pair, keeping degree-6 fits anchored.
    pub fn states_excluding_pairs(&self, pair_indices: &[usize]) -> Vec<f64> {
        let removed: Vec<i32> = pair_indices
            .iter()
            .flat_map(|&k| {
                let (a, b) = self.removed_pairs[k];
                [a, b]
            })
            .collect();
        self.sample_states
            .iter()
            .filter(|s| !removed.contains(s))
            .map(|&s| s as f64)
            .collect()
    }
}

/// Convenience free function mirroring the module's operation vocabulary.
pub fn sample_set(env: &FunctionEstimationEnv, action: usize) -> Vec<(f64, f64)> {
    env.sample_set(action)
}
