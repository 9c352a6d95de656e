//! Value-based reinforcement learning with a hindsight-regularized TD loss.
//!
//! The crate is organized around five building blocks:
//!
//! * [`approx`] — differentiable function approximators: polynomial
//!   least-squares regressors, small fully connected networks with manual
//!   backpropagation, and the dueling value/advantage head.
//! * [`qcore`] — the learning rules: transitions, the replay buffer extended
//!   with behavior-time action values, DQN/DDQN targets, the hindsight loss
//!   and its smoothed-reward form, and the SGD/tabular update rules.
//! * [`envs`] — deterministic desk-scale environments (chain and gridworld
//!   MDPs, the continuous function-estimation setting) plus an exact
//!   value-iteration oracle.
//! * [`trainer`] — the end-to-end training loop: ε-greedy acting, buffer
//!   writes, minibatch updates, target synchronization, episode statistics,
//!   divergence detection.
//! * [`overest`] — the overestimation study: iterated polynomial refitting
//!   for DQN/DDQN and their hindsight variants, bias curves, and the
//!   noise-bound formulas with a Monte Carlo check.

pub mod approx;
pub mod envs;
mod linalg;
pub mod overest;
pub mod qcore;
pub mod trainer;

pub use approx::{
    dueling_aggregate, mlp_backward, mlp_forward, poly_fit, poly_eval, Activation, ApproxError,
    DuelingHead, DuelingSpec, MlpSpec, ParamVector, PolyRegressor, QModel,
};
pub use envs::{
    chain_mdp, gridworld_mdp, value_iteration, EnvError, FunctionEstimationEnv, TabularMdp,
    TrueValue,
};
pub use overest::{
    bias_curve, estimate_all, lower_bound, noise_mc, thrun_upper_bound, BiasCurve, Method,
    NoiseModel,
};
pub use qcore::{
    buffer_push, buffer_sample, ddqn_target, dqn_target, hindsight_loss, hindsight_loss_grad_q,
    sgd_update, smoothed_reward, tabular_update, BufferError, HindsightBuffer, HindsightConfig,
    QTable, Transition, UpdateError,
};
pub use trainer::{
    epsilon_at, select_action, sync_target, train_run, AgentVariant, BaseAlgorithm, Diagnostics,
    EpisodeStats, EpsilonSchedule, EvalOptions, EvalSnapshot, RunStatus, TrainOutcome,
};
