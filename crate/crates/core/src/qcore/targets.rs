//! Bootstrapped target values for DQN and Double DQN.

use super::{argmax_first, Transition};
use crate::approx::QModel;

/// `r` for terminal transitions, otherwise
/// `r + γ · max_a' Q_target(s', a')`.
pub fn dqn_target(t: &Transition, target: &QModel, gamma: f64) -> f64 {
    if t.terminal {
        return t.reward;
    }
    let q_next = target.action_values(&t.next_state);
    let max = q_next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    t.reward + gamma * max
}

/// Double-DQN target: the next action is chosen greedily on the online
/// network, its value read from the target network.
pub fn ddqn_target(t: &Transition, online: &QModel, target: &QModel, gamma: f64) -> f64 {
    if t.terminal {
        return t.reward;
    }
    let next_action = argmax_first(&online.action_values(&t.next_state));
    t.reward + gamma * target.action_values(&t.next_state)[next_action]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::{Activation, MlpSpec, ParamVector};

    /// Network whose output is constant: zero weights, biases = `outputs`.
    fn constant_net(outputs: &[f64]) -> QModel {
        let spec = MlpSpec::new(vec![1, outputs.len()], Activation::Identity);
        let layout = spec.layout();
        let mut params = ParamVector::zeros(spec.param_count());
        for (row, &v) in outputs.iter().enumerate() {
            params.as_mut_slice()[layout.bias_index(0, row)] = v;
        }
        QModel::Mlp { spec, params }
    }

    fn transition(reward: f64, terminal: bool) -> Transition {
        Transition::new(vec![0.0], vec![0.0], 0, reward, terminal, 0.0)
    }

    #[test]
    fn terminal_returns_reward() {
        let net = constant_net(&[100.0, 200.0]);
        assert_eq!(dqn_target(&transition(5.0, true), &net, 0.99), 5.0);
        assert_eq!(ddqn_target(&transition(-1.0, true), &net, &net, 0.99), -1.0);
    }

    #[test]
    fn gamma_zero_returns_reward() {
        let net = constant_net(&[3.0, 7.0]);
        assert_eq!(dqn_target(&transition(2.0, false), &net, 0.0), 2.0);
    }

    #[test]
    fn dqn_target_uses_max() {
        let net = constant_net(&[3.0, 7.0]);
        let y = dqn_target(&transition(1.0, false), &net, 0.9);
        assert!((y - 7.3).abs() < 1e-12);
    }

    #[test]
    fn ddqn_decouples_selection_and_evaluation() {
        let online = constant_net(&[1.0, 9.0]);
        let target = constant_net(&[4.0, 2.0]);
        // Online picks action 1, target values it at 2.
        assert_eq!(ddqn_target(&transition(0.0, false), &online, &target, 1.0), 2.0);
    }

    #[test]
    fn ddqn_equals_dqn_when_networks_coincide() {
        let net = constant_net(&[0.5, -2.0, 4.25]);
        let t = transition(1.5, false);
        assert_eq!(ddqn_target(&t, &net, &net, 0.8), dqn_target(&t, &net, 0.8));
    }
}
