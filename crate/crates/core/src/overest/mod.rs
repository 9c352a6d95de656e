//! The overestimation study on the function-estimation environment.
//!
//! All four methods iterate the same scheme: round 0 fits each action's
//! degree-6 polynomial to the true values on its gapped sample set, and
//! every later round refits against bootstrapped targets built from the
//! previous round's fits.
//!
//! * `dqn` bootstraps through the max over the fitted set — the recursive
//!   "assume the estimate is truth" mechanism that drifts upward.
//! * `ddqn` decouples selection from evaluation: the argmax comes from the
//!   fitted set, the value from a second, independently fitted evaluator
//!   ensemble. Each round the evaluator is refit to the true values on a
//!   freshly drawn adjacent-pair gap per action, and the fitted set refits
//!   on freshly drawn gaps too, so the decoupling noise is renewed rather
//!   than contracted away. (Literal disjoint halves of an 11-point sample
//!   set cannot carry a degree-6 fit; see the `estimate_all` notes.)
//! * `dqn_h` / `ddqn_h` blend the bootstrapped target with the previous
//!   round's own fitted value at the same (state, action) through the
//!   smoothed reward.

use crate::approx::{poly_eval, poly_fit, ApproxError, PolyRegressor};
use crate::envs::FunctionEstimationEnv;
use crate::qcore::smoothed_reward;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const DEGREE: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dqn,
    Ddqn,
    DqnH,
    DdqnH,
}

impl Method {
    pub fn is_hindsight(self) -> bool {
        matches!(self, Method::DqnH | Method::DdqnH)
    }

    pub fn is_decoupled(self) -> bool {
        matches!(self, Method::Ddqn | Method::DdqnH)
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Dqn => "dqn",
            Method::Ddqn => "ddqn",
            Method::DqnH => "dqn_h",
            Method::DdqnH => "ddqn_h",
        }
    }
}

/// Estimation bias `max_a Q̂(s, a) - max_a Q*(s, a)` on the evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasCurve {
    pub grid: Vec<f64>,
    pub bias: Vec<f64>,
    pub method_label: String,
}

impl BiasCurve {
    pub fn mean_bias(&self) -> f64 {
        self.bias.iter().sum::<f64>() / self.bias.len() as f64
    }

    pub fn mean_abs_bias(&self) -> f64 {
        self.bias.iter().map(|b| b.abs()).sum::<f64>() / self.bias.len() as f64
    }

    /// Standard deviation of the first differences of the bias curve; the
    /// study's jaggedness measure.
    pub fn smoothness(&self) -> f64 {
        let diffs: Vec<f64> = self.bias.windows(2).map(|w| w[1] - w[0]).collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / diffs.len() as f64).sqrt()
    }
}

/// The fitted set of one refit round, plus the evaluator ensemble for
/// decoupled methods.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundEstimate {
    pub fits: Vec<PolyRegressor>,
    pub evaluator: Option<Vec<PolyRegressor>>,
}

/// Per-round history of an `estimate_all` run; the last round holds the
/// final per-action regressor set.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOutcome {
    pub rounds: Vec<RoundEstimate>,
}

impl EstimateOutcome {
    pub fn final_round(&self) -> &RoundEstimate {
        self.rounds.last().expect("at least one round")
    }

    pub fn final_fits(&self) -> &[PolyRegressor] {
        &self.final_round().fits
    }
}

/// Runs `rounds` refit iterations of the chosen method and returns the
/// per-action fits of every round. `delta` is ignored for the
/// non-hindsight methods; `seed` drives only the decoupled methods' gap
/// draws, so the dqn family is deterministic across seeds.
pub fn estimate_all(
    env: &FunctionEstimationEnv,
    method: Method,
    delta: f64,
    rounds: usize,
    seed: u64,
) -> Result<EstimateOutcome, ApproxError> {
    assert!(rounds >= 1, "need at least the direct fitting round");
    if method.is_hindsight() {
        assert!(delta > -1.0, "delta must be > -1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = env.n_actions;

    // Round 0: direct fits of the true values on the canonical sample sets.
    let mut fits: Vec<PolyRegressor> = (0..n)
        .map(|a| poly_fit(&env.sample_set(a), DEGREE))
        .collect::<Result<_, _>>()?;
    let mut history = vec![RoundEstimate { fits: fits.clone(), evaluator: None }];

    for _ in 1..rounds {
        let round = if method.is_decoupled() {
            refit_decoupled(env, method, delta, &fits, &mut rng)?
        } else {
            refit_through_max(env, method, delta, &fits)?
        };
        fits = round.fits.clone();
        history.push(round);
    }
    Ok(EstimateOutcome { rounds: history })
}

/// DQN-family round: targets are the max over the previous fits at each
/// action's canonical sample states.
fn refit_through_max(
    env: &FunctionEstimationEnv,
    method: Method,
    delta: f64,
    prev: &[PolyRegressor],
) -> Result<RoundEstimate, ApproxError> {
    let fits = (0..env.n_actions)
        .map(|a| {
            let samples: Vec<(f64, f64)> = env
                .states_for_action(a)
                .into_iter()
                .map(|s| {
                    let y_hat = max_over(prev, s);
                    let target = if method.is_hindsight() {
                        smoothed_reward(y_hat, poly_eval(&prev[a], s), delta)
                    } else {
                        y_hat
                    };
                    (s, target)
                })
                .collect();
            poly_fit(&samples, DEGREE)
        })
        .collect::<Result<_, _>>()?;
    Ok(RoundEstimate { fits, evaluator: None })
}

/// Decoupled round: a fresh evaluator ensemble is fit to the true values on
/// independently drawn reduced subsets (two removal pairs instead of one —
/// the nearest rank-feasible stand-in for training the second estimator on
/// half the experience), the argmax comes from the previous fitted set, and
/// the refit happens on freshly drawn reduced subsets as well.
fn refit_decoupled(
    env: &FunctionEstimationEnv,
    method: Method,
    delta: f64,
    prev: &[PolyRegressor],
    rng: &mut ChaCha8Rng,
) -> Result<RoundEstimate, ApproxError> {
    let n = env.n_actions;
    let evaluator: Vec<PolyRegressor> = (0..n)
        .map(|_| {
            let samples: Vec<(f64, f64)> = env
                .states_excluding_pairs(&draw_two_pairs(n, rng))
                .into_iter()
                .map(|s| (s, env.true_value(s)))
                .collect();
            poly_fit(&samples, DEGREE)
        })
        .collect::<Result<_, _>>()?;
    let fits: Vec<PolyRegressor> = (0..n)
        .map(|a| {
            let samples: Vec<(f64, f64)> = env
                .states_excluding_pairs(&draw_two_pairs(n, rng))
                .into_iter()
                .map(|s| {
                    let chosen = argmax_fit(prev, s);
                    let y_hat = poly_eval(&evaluator[chosen], s);
                    let target = if method.is_hindsight() {
                        smoothed_reward(y_hat, poly_eval(&prev[a], s), delta)
                    } else {
                        y_hat
                    };
                    (s, target)
                })
                .collect();
            poly_fit(&samples, DEGREE)
        })
        .collect::<Result<_, _>>()?;
    Ok(RoundEstimate { fits, evaluator: Some(evaluator) })
}

/// Two distinct removal-pair indices, drawn uniformly.
fn draw_two_pairs(n_actions: usize, rng: &mut ChaCha8Rng) -> [usize; 2] {
    let first = rng.gen_range(0..n_actions);
    let mut second = rng.gen_range(0..n_actions - 1);
    if second >= first {
        second += 1;
    }
    [first, second]
}

fn max_over(fits: &[PolyRegressor], s: f64) -> f64 {
    fits.iter().map(|f| poly_eval(f, s)).fold(f64::NEG_INFINITY, f64::max)
}

fn argmax_fit(fits: &[PolyRegressor], s: f64) -> usize {
    let mut best = 0;
    let mut best_value = poly_eval(&fits[0], s);
    for (i, f) in fits.iter().enumerate().skip(1) {
        let v = poly_eval(f, s);
        if v > best_value {
            best_value = v;
            best = i;
        }
    }
    best
}

/// Bias of a per-action fitted set on the evaluation grid:
/// `max_a fit_a(s) - Q*(s)` per grid point.
pub fn bias_curve(fits: &[PolyRegressor], env: &FunctionEstimationEnv, label: &str) -> BiasCurve {
    assert_eq!(fits.len(), env.n_actions, "fits must cover every action");
    let bias = env
        .eval_grid
        .iter()
        .map(|&s| max_over(fits, s) - env.true_value(s))
        .collect();
    BiasCurve { grid: env.eval_grid.clone(), bias, method_label: label.to_string() }
}

/// Bias readout of a round as the study plots it: decoupled methods report
/// the double estimate (evaluator's value at the fitted set's argmax), the
/// rest the plain max over fits.
pub fn study_bias_curve(
    round: &RoundEstimate,
    env: &FunctionEstimationEnv,
    label: &str,
) -> BiasCurve {
    match &round.evaluator {
        None => bias_curve(&round.fits, env, label),
        Some(evaluator) => {
            let bias = env
                .eval_grid
                .iter()
                .map(|&s| {
                    let chosen = argmax_fit(&round.fits, s);
                    poly_eval(&evaluator[chosen], s) - env.true_value(s)
                })
                .collect();
            BiasCurve { grid: env.eval_grid.clone(), bias, method_label: label.to_string() }
        }
    }
}

/// Uniform corruption of action values in `[-ε, ε]` over `m` actions with
/// discount `γ`: the model behind the max-operator bias bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub epsilon: f64,
    pub m: usize,
    pub gamma: f64,
}

impl NoiseModel {
    pub fn new(epsilon: f64, m: usize, gamma: f64) -> Self {
        assert!(epsilon >= 0.0 && epsilon.is_finite());
        assert!(m >= 1);
        assert!((0.0..=1.0).contains(&gamma));
        Self { epsilon, m, gamma }
    }
}

/// Upper bound on the max-operator overestimation: `γ·ε·(m-1)/(m+1)`.
pub fn thrun_upper_bound(nm: &NoiseModel) -> f64 {
    nm.gamma * nm.epsilon * (nm.m as f64 - 1.0) / (nm.m as f64 + 1.0)
}

/// Tight lower bound `sqrt(C / (m-1))` for `C > 0` and at least two actions.
pub fn lower_bound(c: f64, m: usize) -> f64 {
    assert!(m >= 2, "the lower bound needs at least two actions");
    assert!(c > 0.0, "C must be positive");
    (c / (m as f64 - 1.0)).sqrt()
}

/// Monte Carlo estimate of `E[γ·max of m Uniform(-ε, ε) draws]`; its closed
/// form is exactly [`thrun_upper_bound`].
pub fn noise_mc(nm: &NoiseModel, trials: usize, seed: u64) -> f64 {
    assert!(trials >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    for _ in 0..trials {
        let mut max = f64::NEG_INFINITY;
        for _ in 0..nm.m {
            let draw = if nm.epsilon == 0.0 {
                0.0
            } else {
                rng.gen_range(-nm.epsilon..nm.epsilon)
            };
            max = max.max(draw);
        }
        sum += nm.gamma * max;
    }
    sum / trials as f64
}
