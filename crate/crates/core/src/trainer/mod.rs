//! The training loop: ε-greedy acting, buffer writes with behavior-time
//! action values, minibatch hindsight updates, and target synchronization.

use crate::approx::{Activation, DuelingSpec, MlpSpec, ParamVector, QModel};
use crate::envs::TabularMdp;
use crate::qcore::{
    ddqn_target, dqn_target, smoothed_reward, HindsightBuffer, HindsightConfig, Transition,
    UpdateError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseAlgorithm {
    Dqn,
    Ddqn,
    Duel,
}

/// One agent configuration: the base estimator, whether the hindsight term
/// is part of the loss at all, and the hyperparameters.
///
/// `hindsight: false` removes the hindsight term from the code path entirely
/// rather than setting δ = 0; both paths exist so their bit-identity at
/// δ = 0 is a meaningful check.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentVariant {
    pub base: BaseAlgorithm,
    pub hindsight: bool,
    pub config: HindsightConfig,
}

impl AgentVariant {
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

/// Linear ε decay from `start` to `end` over `decay_steps` frames, constant
/// afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: usize,
}

impl EpsilonSchedule {
    pub fn from_config(config: &HindsightConfig) -> Self {
        Self {
            start: config.epsilon_start,
            end: config.epsilon_end,
            decay_steps: config.epsilon_decay_steps,
        }
    }
}

/// ε at a frame index.
pub fn epsilon_at(schedule: &EpsilonSchedule, frame: usize) -> f64 {
    if schedule.decay_steps == 0 || frame >= schedule.decay_steps {
        return schedule.end;
    }
    let fraction = frame as f64 / schedule.decay_steps as f64;
    schedule.start + fraction * (schedule.end - schedule.start)
}

/// ε-greedy action selection: greedy with probability 1-ε (ties broken
/// toward the lowest action index), uniform otherwise. Returns the chosen
/// action together with the network's value of that action — the quantity
/// the buffer stores as `behavior_q`.
pub fn select_action(
    model: &QModel,
    state: &[f64],
    epsilon: f64,
    rng: &mut impl Rng,
) -> (usize, f64) {
    debug_assert!((0.0..=1.0).contains(&epsilon));
    let values = model.action_values(state);
    let prob: f64 = rng.gen();
    let action = if prob >= epsilon {
        greedy(&values)
    } else {
        rng.gen_range(0..values.len())
    };
    (action, values[action])
}

fn greedy(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Copies every parameter of the online vector into the target vector.
/// Panics when the layouts (lengths) differ.
pub fn sync_target(online: &ParamVector, target: &mut ParamVector) {
    assert_eq!(online.len(), target.len(), "layout mismatch");
    target.as_mut_slice().copy_from_slice(online.as_slice());
}

/// Per-episode record.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStats {
    pub episode_return: f64,
    pub mean_selected_q: f64,
    pub steps: usize,
    pub epsilon_at_end: f64,
    /// Global frame index at which the episode ended.
    pub frame_index: usize,
}

/// Greedy evaluation snapshot taken every `eval_interval` frames.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSnapshot {
    pub frame: usize,
    pub eval_return: f64,
    pub eval_mean_q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Frames between snapshots.
    pub interval: usize,
    /// Greedy episodes per snapshot.
    pub episodes: usize,
    /// Exploration remnant during evaluation.
    pub epsilon: f64,
    /// Step cap per evaluation episode; near-greedy policies on episodic
    /// chains may otherwise never terminate.
    pub max_steps: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { interval: 1000, episodes: 5, epsilon: 0.001, max_steps: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// A parameter or Q-value went non-finite, or |Q| crossed the ceiling.
    Diverged { frame: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub status: RunStatus,
    pub frames_run: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub online: QModel,
    pub target: QModel,
    pub episodes: Vec<EpisodeStats>,
    pub evals: Vec<EvalSnapshot>,
    pub diagnostics: Diagnostics,
}

/// Everything the per-frame observer can inspect: the transition about to
/// be stored and both networks as they were when the action was taken.
pub struct FrameView<'a> {
    pub frame: usize,
    pub transition: &'a Transition,
    pub online: &'a QModel,
    pub target: &'a QModel,
}

/// Runs the full training loop for `frames` environment steps.
///
/// Fully reproducible per seed: acting, environment sampling, minibatch
/// draws, and parameter init each use their own stream of one seeded
/// generator family, and greedy evaluation runs on detached generators so
/// enabling snapshots cannot perturb the training trajectory.
pub fn train_run(
    env: &TabularMdp,
    variant: &AgentVariant,
    frames: usize,
    seed: u64,
) -> TrainOutcome {
    train_run_with_eval(env, variant, frames, seed, None)
}

pub fn train_run_with_eval(
    env: &TabularMdp,
    variant: &AgentVariant,
    frames: usize,
    seed: u64,
    eval: Option<EvalOptions>,
) -> TrainOutcome {
    train_run_observed(env, variant, frames, seed, eval, |_| {})
}

pub fn train_run_observed(
    env: &TabularMdp,
    variant: &AgentVariant,
    frames: usize,
    seed: u64,
    eval: Option<EvalOptions>,
    mut observer: impl FnMut(FrameView<'_>),
) -> TrainOutcome {
    assert!(frames > 0, "frames must be positive");
    variant.config.validate().expect("invalid config");
    let config = &variant.config;
    let schedule = EpsilonSchedule::from_config(config);

    let mut online = build_model(env, variant, seed);
    let mut target = online.clone();
    let mut buffer = HindsightBuffer::new(config.buffer_capacity, stream_seed(seed, 3));
    let mut rng_action = ChaCha8Rng::seed_from_u64(stream_seed(seed, 1));
    let mut rng_env = ChaCha8Rng::seed_from_u64(stream_seed(seed, 2));

    let mut episodes = Vec::new();
    let mut evals = Vec::new();
    let mut status = RunStatus::Completed;

    let mut state = 0usize;
    let mut episode_return = 0.0;
    let mut episode_q_sum = 0.0;
    let mut episode_steps = 0usize;
    let mut grad_acc = vec![0.0; online.param_len()];
    let mut frames_run = 0usize;

    'frames: for frame in 0..frames {
        frames_run = frame + 1;
        let epsilon = epsilon_at(&schedule, frame);
        let obs = env.one_hot(state);
        let (action, behavior_q) = select_action(&online, &obs, epsilon, &mut rng_action);
        if exceeds_ceiling(behavior_q, config.q_ceiling) {
            status = RunStatus::Diverged { frame };
            break 'frames;
        }
        let (next_state, reward, terminal) = env.step(state, action, &mut rng_env);
        let transition = Transition::new(
            obs,
            env.one_hot(next_state),
            action,
            reward,
            terminal,
            behavior_q,
        );
        observer(FrameView { frame, transition: &transition, online: &online, target: &target });
        buffer.push(transition);

        episode_return += reward;
        episode_q_sum += behavior_q;
        episode_steps += 1;

        if buffer.len() >= config.batch_size {
            match minibatch_update(&mut online, &target, &mut buffer, variant, &mut grad_acc) {
                Ok(max_abs_q) => {
                    if exceeds_ceiling(max_abs_q, config.q_ceiling) || !online.params_finite() {
                        status = RunStatus::Diverged { frame };
                        break 'frames;
                    }
                }
                Err(UpdateError::NonFinite { .. }) => {
                    status = RunStatus::Diverged { frame };
                    break 'frames;
                }
            }
        }

        if (frame + 1) % config.target_sync_period == 0 {
            target.sync_from(&online);
        }

        if terminal {
            episodes.push(EpisodeStats {
                episode_return,
                mean_selected_q: episode_q_sum / episode_steps as f64,
                steps: episode_steps,
                epsilon_at_end: epsilon,
                frame_index: frame,
            });
            episode_return = 0.0;
            episode_q_sum = 0.0;
            episode_steps = 0;
            state = 0;
        } else {
            state = next_state;
        }

        if let Some(opts) = eval {
            if opts.interval > 0 && (frame + 1) % opts.interval == 0 {
                evals.push(evaluate(env, &online, frame + 1, &opts, seed));
            }
        }
    }

    // Final snapshot so every completed run has a last evaluation on record.
    if let Some(opts) = eval {
        if status == RunStatus::Completed
            && (opts.interval == 0 || frames % opts.interval != 0)
        {
            evals.push(evaluate(env, &online, frames, &opts, seed));
        }
    }

    TrainOutcome {
        online,
        target,
        episodes,
        evals,
        diagnostics: Diagnostics { status, frames_run },
    }
}

fn exceeds_ceiling(q: f64, ceiling: f64) -> bool {
    !q.is_finite() || q.abs() > ceiling
}

/// One minibatch step: per-sample targets per the base algorithm, residuals
/// per the variant's loss, gradients averaged and applied in a single scaled
/// step. Returns the largest |Q| seen for divergence monitoring.
fn minibatch_update(
    online: &mut QModel,
    target: &QModel,
    buffer: &mut HindsightBuffer,
    variant: &AgentVariant,
    grad_acc: &mut [f64],
) -> Result<f64, UpdateError> {
    let config = &variant.config;
    let batch = buffer
        .sample(config.batch_size)
        .expect("buffer readiness is checked before sampling");
    grad_acc.fill(0.0);
    let mut max_abs_q: f64 = 0.0;

    for t in &batch {
        let y_hat = match variant.base {
            BaseAlgorithm::Dqn | BaseAlgorithm::Duel => dqn_target(t, target, config.gamma),
            BaseAlgorithm::Ddqn => ddqn_target(t, online, target, config.gamma),
        };
        if !y_hat.is_finite() {
            return Err(UpdateError::NonFinite { what: "target" });
        }
        let q = online.action_values(&t.state)[t.action];
        if !q.is_finite() {
            return Err(UpdateError::NonFinite { what: "action value" });
        }
        max_abs_q = max_abs_q.max(q.abs()).max(y_hat.abs());
        let goal = if config.lr_half_mode || !variant.hindsight {
            y_hat
        } else {
            smoothed_reward(y_hat, t.behavior_q, config.delta)
        };
        let residual = goal - q;
        let grad = online.grad_action(&t.state, t.action);
        for (acc, g) in grad_acc.iter_mut().zip(grad.iter()) {
            *acc += residual * g;
        }
    }

    if grad_acc.iter().any(|g| !g.is_finite()) {
        return Err(UpdateError::NonFinite { what: "gradient" });
    }
    let step = if config.lr_half_mode {
        config.alpha / (1.0 + config.delta)
    } else {
        config.alpha
    };
    online.apply_scaled_delta(grad_acc, step / config.batch_size as f64);
    Ok(max_abs_q)
}

/// Near-greedy evaluation episodes on generators detached from training.
fn evaluate(
    env: &TabularMdp,
    online: &QModel,
    frame: usize,
    opts: &EvalOptions,
    seed: u64,
) -> EvalSnapshot {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, 100).wrapping_add(frame as u64));
    let mut total_return = 0.0;
    let mut q_sum = 0.0;
    let mut q_count = 0usize;
    for _ in 0..opts.episodes {
        let mut state = 0usize;
        for _ in 0..opts.max_steps {
            let obs = env.one_hot(state);
            let (action, q) = select_action(online, &obs, opts.epsilon, &mut rng);
            let (next, reward, terminal) = env.step(state, action, &mut rng);
            total_return += reward;
            q_sum += q;
            q_count += 1;
            if terminal {
                break;
            }
            state = next;
        }
    }
    EvalSnapshot {
        frame,
        eval_return: total_return / opts.episodes as f64,
        eval_mean_q: q_sum / q_count.max(1) as f64,
    }
}

fn build_model(env: &TabularMdp, variant: &AgentVariant, seed: u64) -> QModel {
    let config = &variant.config;
    let input = env.n_states();
    let actions = env.n_actions();
    match variant.base {
        BaseAlgorithm::Dqn | BaseAlgorithm::Ddqn => {
            let mut widths = vec![input];
            widths.extend_from_slice(&config.hidden_widths);
            widths.push(actions);
            QModel::mlp(MlpSpec::new(widths, config.activation), stream_seed(seed, 0))
        }
        BaseAlgorithm::Duel => {
            let feature = *config.hidden_widths.last().unwrap_or(&16).max(&1);
            let mut trunk = vec![input];
            if config.hidden_widths.is_empty() {
                trunk.push(feature);
            } else {
                trunk.extend_from_slice(&config.hidden_widths);
            }
            let spec = DuelingSpec::new(
                MlpSpec::new(trunk, config.activation),
                MlpSpec::new(vec![feature, actions], Activation::Identity),
                MlpSpec::new(vec![feature, 1], Activation::Identity),
            );
            QModel::dueling(spec, stream_seed(seed, 0))
        }
    }
}

/// Independent deterministic generator streams derived from one run seed.
fn stream_seed(seed: u64, stream: u64) -> u64 {
    // SplitMix64 over (seed, stream); cheap and well distributed.
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests;
