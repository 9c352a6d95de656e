//! Dueling decomposition: Q(s,a) = V(s) + Adv(s,a) - mean_a' Adv(s,a').

use super::mlp::{MlpSpec, ParamVector};
use serde::{Deserialize, Serialize};

/// Architecture of a dueling network: a shared trunk feeding an advantage
/// head (one output per action) and a scalar state-value head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuelingSpec {
    pub shared: MlpSpec,
    pub advantage: MlpSpec,
    pub value: MlpSpec,
}

impl DuelingSpec {
    pub fn new(shared: MlpSpec, advantage: MlpSpec, value: MlpSpec) -> Self {
        assert_eq!(shared.output_width(), advantage.input_width(), "trunk/advantage width mismatch");
        assert_eq!(shared.output_width(), value.input_width(), "trunk/value width mismatch");
        assert_eq!(value.output_width(), 1, "state-value head must be scalar");
        assert!(advantage.output_width() >= 1);
        Self { shared, advantage, value }
    }

    pub fn action_count(&self) -> usize {
        self.advantage.output_width()
    }

    pub fn param_count(&self) -> usize {
        self.shared.param_count() + self.advantage.param_count() + self.value.param_count()
    }
}

/// Parameters of the three streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuelingHead {
    pub shared_params: ParamVector,
    pub advantage_params: ParamVector,
    pub value_params: ParamVector,
}

impl DuelingHead {
    pub fn init(spec: &DuelingSpec, seed: u64) -> Self {
        // Distinct streams per sub-network so the heads do not mirror each other.
        Self {
            shared_params: spec.shared.init_params(seed),
            advantage_params: spec.advantage.init_params(seed.wrapping_add(1)),
            value_params: spec.value.init_params(seed.wrapping_add(2)),
        }
    }
}

/// Combines advantages and a state value into Q-values:
/// `q[a] = advantages[a] - mean(advantages) + state_value`.
pub fn dueling_aggregate(advantages: &[f64], state_value: f64) -> Vec<f64> {
    assert!(!advantages.is_empty(), "advantage sequence must be non-empty");
    let mean = advantages.iter().sum::<f64>() / advantages.len() as f64;
    advantages.iter().map(|&a| a - mean + state_value).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_advantages_cancel() {
        let q = dueling_aggregate(&[3.0, 3.0, 3.0], -1.5);
        assert_eq!(q, vec![-1.5, -1.5, -1.5]);
    }

    #[test]
    fn zero_mean_advantages_pass_through() {
        assert_eq!(dueling_aggregate(&[1.0, -1.0], 0.0), vec![1.0, -1.0]);
    }

    #[test]
    fn mean_is_subtracted() {
        assert_eq!(dueling_aggregate(&[2.0, 0.0, 1.0], 5.0), vec![6.0, 4.0, 5.0]);
    }

    #[test]
    #[should_panic(expected = "non-empty")]
    fn empty_advantages_panic() {
        dueling_aggregate(&[], 0.0);
    }

    proptest! {
        // Identifiability: adding a constant to every advantage leaves Q unchanged.
        #[test]
        fn prop_invariant_to_constant_shift(
            advs in proptest::collection::vec(-10.0f64..10.0, 1..12),
            value in -10.0f64..10.0,
            shift in -5.0f64..5.0,
        ) {
            let base = dueling_aggregate(&advs, value);
            let shifted: Vec<f64> = advs.iter().map(|a| a + shift).collect();
            let moved = dueling_aggregate(&shifted, value);
            for (b, m) in base.iter().zip(moved.iter()) {
                prop_assert!((b - m).abs() < 1e-9);
            }
        }
    }
}
