use super::*;
use crate::approx::{Activation, MlpSpec, ParamVector};
use crate::envs::{chain_mdp, value_iteration};
use proptest::prelude::*;

fn constant_net(outputs: &[f64]) -> QModel {
    let spec = MlpSpec::new(vec![1, outputs.len()], Activation::Identity);
    let layout = spec.layout();
    let mut params = ParamVector::zeros(spec.param_count());
    for (row, &v) in outputs.iter().enumerate() {
        params.as_mut_slice()[layout.bias_index(0, row)] = v;
    }
    QModel::Mlp { spec, params }
}

fn tabular_variant(base: BaseAlgorithm, hindsight: bool, delta: f64, alpha: f64) -> AgentVariant {
    AgentVariant {
        base,
        hindsight,
        config: HindsightConfig {
            delta,
            alpha,
            gamma: 0.9,
            epsilon_decay_steps: 500,
            target_sync_period: 100,
            batch_size: 16,
            buffer_capacity: 2000,
            ..Default::default()
        },
    }
}

#[test]
fn epsilon_schedule_endpoints_and_midpoint() {
    let s = EpsilonSchedule { start: 1.0, end: 0.05, decay_steps: 1000 };
    assert_eq!(epsilon_at(&s, 0), 1.0);
    assert_eq!(epsilon_at(&s, 1000), 0.05);
    assert_eq!(epsilon_at(&s, 5000), 0.05);
    assert!((epsilon_at(&s, 500) - (1.0 + 0.05) / 2.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn prop_epsilon_is_non_increasing(
        start in 0.0f64..=1.0,
        end_frac in 0.0f64..=1.0,
        decay in 1usize..5000,
        f1 in 0usize..6000,
        f2 in 0usize..6000,
    ) {
        let s = EpsilonSchedule { start, end: start * end_frac, decay_steps: decay };
        let (lo, hi) = (f1.min(f2), f1.max(f2));
        prop_assert!(epsilon_at(&s, lo) >= epsilon_at(&s, hi));
    }
}

#[test]
fn greedy_selection_and_behavior_q() {
    let net = constant_net(&[1.0, 5.0, 3.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (action, q) = select_action(&net, &[0.0], 0.0, &mut rng);
    assert_eq!((action, q), (1, 5.0));
}

#[test]
fn greedy_ties_break_toward_lowest_index() {
    let net = constant_net(&[2.0, 2.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..50 {
        assert_eq!(select_action(&net, &[0.0], 0.0, &mut rng).0, 0);
    }
}

#[test]
fn full_exploration_is_uniform() {
    let net = constant_net(&[9.0, 1.0, 1.0, 1.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let draws = 1_000_000;
    let mut counts = [0usize; 4];
    for _ in 0..draws {
        counts[select_action(&net, &[0.0], 1.0, &mut rng).0] += 1;
    }
    for (a, &c) in counts.iter().enumerate() {
        let freq = c as f64 / draws as f64;
        assert!((freq - 0.25).abs() < 0.0025, "action {a}: frequency {freq}");
    }
}

#[test]
fn sync_target_copies_and_is_idempotent() {
    let spec = MlpSpec::new(vec![3, 4, 2], Activation::Tanh);
    let online = spec.init_params(1);
    let mut target = spec.init_params(2);
    sync_target(&online, &mut target);
    assert_eq!(online, target);
    sync_target(&online, &mut target);
    assert_eq!(online, target);
}

#[test]
#[should_panic(expected = "layout mismatch")]
fn sync_target_rejects_mismatched_layouts() {
    let online = ParamVector::zeros(4);
    let mut target = ParamVector::zeros(5);
    sync_target(&online, &mut target);
}

#[test]
#[should_panic(expected = "frames must be positive")]
fn zero_frames_is_a_precondition_violation() {
    let env = chain_mdp(3, 0.9);
    let variant = tabular_variant(BaseAlgorithm::Dqn, false, 0.0, 0.01);
    train_run(&env, &variant, 0, 0);
}

#[test]
fn identical_seeds_give_identical_runs() {
    let env = chain_mdp(4, 0.9);
    let variant = tabular_variant(BaseAlgorithm::Dqn, true, 0.5, 0.02);
    let a = train_run(&env, &variant, 1500, 11);
    let b = train_run(&env, &variant, 1500, 11);
    assert_eq!(a.episodes, b.episodes);
    assert_eq!(a.online.flat_params(), b.online.flat_params());
    // Detached evaluation generators leave the trajectory untouched.
    let c = train_run_with_eval(&env, &variant, 1500, 11, Some(EvalOptions::default()));
    assert_eq!(a.online.flat_params(), c.online.flat_params());
    assert_eq!(a.episodes, c.episodes);
    assert!(!c.evals.is_empty());
}

#[test]
fn episode_frame_indices_strictly_increase() {
    let env = chain_mdp(4, 0.9);
    let variant = tabular_variant(BaseAlgorithm::Dqn, false, 0.0, 0.02);
    let out = train_run(&env, &variant, 2000, 3);
    assert!(out.episodes.len() > 1);
    for pair in out.episodes.windows(2) {
        assert!(pair[1].frame_index > pair[0].frame_index);
        assert!(pair[0].steps >= 1);
    }
}

#[test]
fn hindsight_off_and_delta_zero_are_bit_identical() {
    let env = chain_mdp(5, 0.9);
    let on = tabular_variant(BaseAlgorithm::Dqn, true, 0.0, 0.02);
    let off = AgentVariant { hindsight: false, ..on.clone() };
    let a = train_run(&env, &on, 1200, 5);
    let b = train_run(&env, &off, 1200, 5);
    let (pa, pb) = (a.online.flat_params(), b.online.flat_params());
    assert_eq!(pa.len(), pb.len());
    for (x, y) in pa.iter().zip(pb.iter()) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn lr_half_mode_matches_half_step_plain_training() {
    let env = chain_mdp(5, 0.9);
    let alpha = 0.02;
    let mut half = tabular_variant(BaseAlgorithm::Dqn, true, 1.0, alpha);
    half.config.lr_half_mode = true;
    let plain = AgentVariant {
        hindsight: false,
        config: HindsightConfig { alpha: alpha / 2.0, lr_half_mode: false, ..half.config.clone() },
        ..half.clone()
    };
    let a = train_run(&env, &half, 1200, 5);
    let b = train_run(&env, &plain, 1200, 5);
    for (x, y) in a.online.flat_params().iter().zip(b.online.flat_params().iter()) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn stored_behavior_q_matches_acting_network() {
    let env = chain_mdp(5, 0.9);
    let variant = tabular_variant(BaseAlgorithm::Dqn, true, 1.0, 0.02);
    let mut audited = 0;
    train_run_observed(&env, &variant, 800, 13, None, |view| {
        let q = view.online.action_values(&view.transition.state)[view.transition.action];
        assert_eq!(q.to_bits(), view.transition.behavior_q.to_bits());
        audited += 1;
    });
    assert_eq!(audited, 800);
}

#[test]
fn target_outputs_constant_between_syncs() {
    let env = chain_mdp(5, 0.9);
    let variant = tabular_variant(BaseAlgorithm::Dqn, false, 0.0, 0.05);
    let period = variant.config.target_sync_period;
    let probe = env.one_hot(2);
    let mut last: Option<Vec<f64>> = None;
    train_run_observed(&env, &variant, 600, 2, None, |view| {
        let now = view.target.action_values(&probe);
        if let Some(prev) = &last {
            // The sync happens at the end of frames that are multiples of
            // the period, so a change is visible only on the next frame.
            if view.frame % period == 0 && view.frame > 0 {
                last = Some(now);
                return;
            }
            assert_eq!(prev, &now, "target moved at frame {}", view.frame);
        }
        last = Some(now);
    });
}

#[test]
fn divergence_is_detected_and_reported() {
    let env = chain_mdp(5, 0.9);
    let mut variant = tabular_variant(BaseAlgorithm::Dqn, true, 1.0, 50.0);
    variant.config.q_ceiling = 100.0;
    let out = train_run(&env, &variant, 3000, 1);
    match out.diagnostics.status {
        RunStatus::Diverged { frame } => assert!(frame < 3000),
        RunStatus::Completed => panic!("a 50x step size on this chain should diverge"),
    }
}

#[test]
fn negative_half_delta_requires_divergence_flag() {
    let env = chain_mdp(3, 0.9);
    let mut variant = tabular_variant(BaseAlgorithm::Dqn, true, -0.5, 0.01);
    let result = std::panic::catch_unwind(|| train_run(&env, &variant, 10, 0));
    assert!(result.is_err(), "negative delta without the flag must be rejected");
    variant.config.divergence_study = true;
    train_run(&env, &variant, 10, 0);
}

#[test]
fn dqn_learns_the_chain_policy() {
    let env = chain_mdp(5, 0.9);
    let mut variant = tabular_variant(BaseAlgorithm::Dqn, true, 0.0, 0.05);
    variant.config.epsilon_decay_steps = 2000;
    let out = train_run(&env, &variant, 15_000, 0);
    assert_eq!(out.diagnostics.status, RunStatus::Completed);
    let oracle = value_iteration(&env, 1e-10).unwrap();
    for s in 0..4 {
        let qs = out.online.action_values(&env.one_hot(s));
        let greedy = if qs[1] > qs[0] { 1 } else { 0 };
        assert_eq!(greedy, oracle.greedy_action(s), "state {s}: learned {qs:?}");
    }
}

#[test]
fn dueling_variant_trains_and_composes_with_hindsight() {
    let env = chain_mdp(4, 0.9);
    let mut variant = tabular_variant(BaseAlgorithm::Duel, true, 1.0, 0.01);
    variant.config.hidden_widths = vec![8];
    let out = train_run(&env, &variant, 1500, 4);
    assert_eq!(out.diagnostics.status, RunStatus::Completed);
    assert!(out.online.params_finite());
    assert_eq!(out.online.action_count(), 2);
}

#[test]
fn ddqn_variant_trains() {
    let env = chain_mdp(4, 0.9);
    let variant = tabular_variant(BaseAlgorithm::Ddqn, true, 0.5, 0.02);
    let out = train_run(&env, &variant, 1500, 4);
    assert_eq!(out.diagnostics.status, RunStatus::Completed);
}

#[test]
fn variant_labels() {
    let v = tabular_variant(BaseAlgorithm::Ddqn, true, 1.0, 0.1);
    assert_eq!(v.label(), "ddqn_h");
    let v = tabular_variant(BaseAlgorithm::Duel, false, 1.0, 0.1);
    assert_eq!(v.label(), "duel");
}
