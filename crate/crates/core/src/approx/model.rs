//! A unified Q-function over plain and dueling architectures.

use super::dueling::{dueling_aggregate, DuelingHead, DuelingSpec};
use super::mlp::{mlp_backward_full, mlp_forward, MlpSpec, ParamVector};

/// One Q-network: maps a state vector to one value per action and exposes
/// the flat-parameter view the trainer's SGD step and target sync need.
#[derive(Debug, Clone, PartialEq)]
pub enum QModel {
    Mlp { spec: MlpSpec, params: ParamVector },
    Dueling { spec: DuelingSpec, head: DuelingHead },
}

impl QModel {
    pub fn mlp(spec: MlpSpec, seed: u64) -> Self {
        let params = spec.init_params(seed);
        QModel::Mlp { spec, params }
    }

    pub fn dueling(spec: DuelingSpec, seed: u64) -> Self {
        let head = DuelingHead::init(&spec, seed);
        QModel::Dueling { spec, head }
    }

    pub fn action_count(&self) -> usize {
        match self {
            QModel::Mlp { spec, .. } => spec.output_width(),
            QModel::Dueling { spec, .. } => spec.action_count(),
        }
    }

    pub fn input_width(&self) -> usize {
        match self {
            QModel::Mlp { spec, .. } => spec.input_width(),
            QModel::Dueling { spec, .. } => spec.shared.input_width(),
        }
    }

    pub fn param_len(&self) -> usize {
        match self {
            QModel::Mlp { spec, .. } => spec.param_count(),
            QModel::Dueling { spec, .. } => spec.param_count(),
        }
    }

    /// Q(s, ·) for every action.
    pub fn action_values(&self, state: &[f64]) -> Vec<f64> {
        match self {
            QModel::Mlp { spec, params } => mlp_forward(spec, params, state),
            QModel::Dueling { spec, head } => {
                let features = mlp_forward(&spec.shared, &head.shared_params, state);
                let advantages = mlp_forward(&spec.advantage, &head.advantage_params, &features);
                let value = mlp_forward(&spec.value, &head.value_params, &features)[0];
                dueling_aggregate(&advantages, value)
            }
        }
    }

    /// Gradient of Q(s, action) with respect to the flat parameter view.
    pub fn grad_action(&self, state: &[f64], action: usize) -> Vec<f64> {
        assert!(action < self.action_count(), "action index out of range");
        match self {
            QModel::Mlp { spec, params } => {
                let mut output_grad = vec![0.0; spec.output_width()];
                output_grad[action] = 1.0;
                mlp_backward_full(spec, params, state, &output_grad).0.as_slice().to_vec()
            }
            QModel::Dueling { spec, head } => {
                let m = spec.action_count() as f64;
                let features = mlp_forward(&spec.shared, &head.shared_params, state);
                // dQ(s,a)/dAdv_k = 1[k == a] - 1/m, dQ/dV = 1.
                let adv_grad: Vec<f64> = (0..spec.action_count())
                    .map(|k| if k == action { 1.0 - 1.0 / m } else { -1.0 / m })
                    .collect();
                let (g_adv, feat_grad_adv) =
                    mlp_backward_full(&spec.advantage, &head.advantage_params, &features, &adv_grad);
                let (g_val, feat_grad_val) =
                    mlp_backward_full(&spec.value, &head.value_params, &features, &[1.0]);
                let feat_grad: Vec<f64> = feat_grad_adv
                    .iter()
                    .zip(feat_grad_val.iter())
                    .map(|(a, v)| a + v)
                    .collect();
                let (g_shared, _) =
                    mlp_backward_full(&spec.shared, &head.shared_params, state, &feat_grad);
                let mut flat = Vec::with_capacity(spec.param_count());
                flat.extend_from_slice(g_shared.as_slice());
                flat.extend_from_slice(g_adv.as_slice());
                flat.extend_from_slice(g_val.as_slice());
                flat
            }
        }
    }

    /// `params += scale * delta` over the flat view (shared | advantage | value
    /// for dueling networks).
    pub fn apply_scaled_delta(&mut self, delta: &[f64], scale: f64) {
        assert_eq!(delta.len(), self.param_len(), "delta length mismatch");
        match self {
            QModel::Mlp { params, .. } => {
                for (p, d) in params.as_mut_slice().iter_mut().zip(delta) {
                    *p += scale * d;
                }
            }
            QModel::Dueling { head, .. } => {
                let mut rest = delta;
                for part in [
                    &mut head.shared_params,
                    &mut head.advantage_params,
                    &mut head.value_params,
                ] {
                    let (seg, tail) = rest.split_at(part.len());
                    for (p, d) in part.as_mut_slice().iter_mut().zip(seg) {
                        *p += scale * d;
                    }
                    rest = tail;
                }
            }
        }
    }

    pub fn flat_params(&self) -> Vec<f64> {
        match self {
            QModel::Mlp { params, .. } => params.as_slice().to_vec(),
            QModel::Dueling { head, .. } => {
                let mut flat = Vec::with_capacity(self.param_len());
                flat.extend_from_slice(head.shared_params.as_slice());
                flat.extend_from_slice(head.advantage_params.as_slice());
                flat.extend_from_slice(head.value_params.as_slice());
                flat
            }
        }
    }

    pub fn params_finite(&self) -> bool {
        match self {
            QModel::Mlp { params, .. } => params.iter().all(|p| p.is_finite()),
            QModel::Dueling { head, .. } => {
                head.shared_params.iter().all(|p| p.is_finite())
                    && head.advantage_params.iter().all(|p| p.is_finite())
                    && head.value_params.iter().all(|p| p.is_finite())
            }
        }
    }

    /// Copies every parameter from `other`. Panics when architectures differ.
    pub fn sync_from(&mut self, other: &QModel) {
        match (self, other) {
            (QModel::Mlp { spec, params }, QModel::Mlp { spec: o_spec, params: o_params }) => {
                assert_eq!(spec, o_spec, "layout mismatch");
                params.as_mut_slice().copy_from_slice(o_params.as_slice());
            }
            (QModel::Dueling { spec, head }, QModel::Dueling { spec: o_spec, head: o_head }) => {
                assert_eq!(spec, o_spec, "layout mismatch");
                head.shared_params
                    .as_mut_slice()
                    .copy_from_slice(o_head.shared_params.as_slice());
                head.advantage_params
                    .as_mut_slice()
                    .copy_from_slice(o_head.advantage_params.as_slice());
                head.value_params
                    .as_mut_slice()
                    .copy_from_slice(o_head.value_params.as_slice());
            }
            _ => panic!("layout mismatch: cannot sync across architectures"),
        }
    }
}
