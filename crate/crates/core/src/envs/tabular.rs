//! Finite MDPs with exact transition and reward tables.

use crate::qcore::QTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("value iteration did not reach tolerance {tolerance} within {iterations} sweeps (residual {residual})")]
    NoConvergence { tolerance: f64, iterations: usize, residual: f64 },
}

/// A finite MDP: dense `(s, a) -> distribution over s'` transition table,
/// reward table, per-state terminal flags, and a discount factor below 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    /// Row-major `[s][a][s']` probabilities.
    transition: Vec<f64>,
    /// Row-major `[s][a]` rewards.
    reward: Vec<f64>,
    terminal: Vec<bool>,
    gamma: f64,
}

impl TabularMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        terminal: Vec<bool>,
        gamma: f64,
    ) -> Self {
        assert!(n_states > 0 && n_actions > 0);
        assert_eq!(transition.len(), n_states * n_actions * n_states);
        assert_eq!(reward.len(), n_states * n_actions);
        assert_eq!(terminal.len(), n_states);
        assert!((0.0..1.0).contains(&gamma), "gamma must lie in [0, 1)");
        assert!(reward.iter().all(|r| r.is_finite()), "rewards must be finite");
        for s in 0..n_states {
            for a in 0..n_actions {
                let row = &transition[(s * n_actions + a) * n_states..][..n_states];
                let sum: f64 = row.iter().sum();
                assert!(
                    (sum - 1.0).abs() <= 1e-12,
                    "transition distribution of (s={s}, a={a}) sums to {sum}"
                );
                assert!(row.iter().all(|&p| p >= 0.0));
            }
        }
        Self { n_states, n_actions, transition, reward, terminal, gamma }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.reward[state * self.n_actions + action]
    }

    pub fn is_terminal(&self, state: usize) -> bool {
        self.terminal[state]
    }

    pub fn transition_row(&self, state: usize, action: usize) -> &[f64] {
        &self.transition[(state * self.n_actions + action) * self.n_states..][..self.n_states]
    }

    /// Samples `(next_state, reward, next_is_terminal)`. Pure in the sense
    /// that identical (state, action, generator state) give identical
    /// results.
    pub fn step(&self, state: usize, action: usize, rng: &mut impl Rng) -> (usize, f64, bool) {
        let row = self.transition_row(state, action);
        let draw: f64 = rng.gen();
        let mut acc = 0.0;
        let mut next = self.n_states - 1;
        for (s2, &p) in row.iter().enumerate() {
            acc += p;
            if draw < acc {
                next = s2;
                break;
            }
        }
        (next, self.reward(state, action), self.terminal[next])
    }

    /// One-hot observation vector for a state.
    pub fn one_hot(&self, state: usize) -> Vec<f64> {
        let mut obs = vec![0.0; self.n_states];
        obs[state] = 1.0;
        obs
    }
}

/// Solves for Q* by value iteration; the returned table's sup-norm Bellman
/// residual is at most `tolerance`.
///
/// Terminal states carry no continuation value: the backup treats
/// `max_a' Q(s', a')` as 0 whenever `s'` is terminal, and terminal states'
/// own rows converge to their (zero) rewards.
pub fn value_iteration(mdp: &TabularMdp, tolerance: f64) -> Result<QTable, EnvError> {
    assert!(tolerance > 0.0);
    assert!(mdp.gamma < 1.0);
    const MAX_SWEEPS: usize = 1_000_000;

    let mut q = QTable::new(mdp.n_states, mdp.n_actions);
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_SWEEPS {
        let mut next = q.clone();
        residual = 0.0;
        for s in 0..mdp.n_states {
            for a in 0..mdp.n_actions {
                let mut backup = mdp.reward(s, a);
                for (s2, &p) in mdp.transition_row(s, a).iter().enumerate() {
                    if p > 0.0 && !mdp.is_terminal(s2) {
                        backup += mdp.gamma * p * q.max_over_actions(s2);
                    }
                }
                residual = residual.max((backup - q.get(s, a)).abs());
                next.set(s, a, backup);
            }
        }
        q = next;
        if residual <= tolerance {
            return Ok(q);
        }
    }
    Err(EnvError::NoConvergence { tolerance, iterations: MAX_SWEEPS, residual })
}

/// Deterministic left/right chain of `n` states. Moving right from the
/// second-to-last state pays 1 and terminates; everything else pays 0.
pub fn chain_mdp(n: usize, gamma: f64) -> TabularMdp {
    assert!(n >= 2, "a chain needs at least two states");
    let n_actions = 2; // 0 = left, 1 = right
    let mut transition = vec![0.0; n * n_actions * n];
    let mut reward = vec![0.0; n * n_actions];
    let mut terminal = vec![false; n];
    terminal[n - 1] = true;
    for s in 0..n {
        for a in 0..n_actions {
            let next = if terminal[s] {
                s // absorbing
            } else if a == 0 {
                s.saturating_sub(1)
            } else {
                s + 1
            };
            transition[(s * n_actions + a) * n + next] = 1.0;
            if !terminal[s] && a == 1 && next == n - 1 {
                reward[s * n_actions + a] = 1.0;
            }
        }
    }
    TabularMdp::new(n, n_actions, transition, reward, terminal, gamma)
}

/// 4×4 gridworld with deterministic moves, walls at the edges, and a
/// terminal goal in the bottom-right corner paying 1 on entry.
pub fn gridworld_mdp(gamma: f64) -> TabularMdp {
    const SIDE: usize = 4;
    let n = SIDE * SIDE;
    let n_actions = 4; // up, down, left, right
    let goal = n - 1;
    let mut transition = vec![0.0; n * n_actions * n];
    let mut reward = vec![0.0; n * n_actions];
    let mut terminal = vec![false; n];
    terminal[goal] = true;
    for s in 0..n {
        let (row, col) = (s / SIDE, s % SIDE);
        for a in 0..n_actions {
            let next = if terminal[s] {
                s
            } else {
                let (r2, c2) = match a {
                    0 => (row.saturating_sub(1), col),
                    1 => ((row + 1).min(SIDE - 1), col),
                    2 => (row, col.saturating_sub(1)),
                    _ => (row, (col + 1).min(SIDE - 1)),
                };
                r2 * SIDE + c2
            };
            transition[(s * n_actions + a) * n + next] = 1.0;
            if !terminal[s] && next == goal {
                reward[s * n_actions + a] = 1.0;
            }
        }
    }
    TabularMdp::new(n, n_actions, transition, reward, terminal, gamma)
}

/// Seeded random MDP for oracle cross-checks: dense random transition
/// distributions, rewards in [-1, 1], and a small chance per state of being
/// terminal (never the initial state, so every instance has work to do).
pub fn random_mdp(n_states: usize, n_actions: usize, gamma: f64, seed: u64) -> TabularMdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut transition = vec![0.0; n_states * n_actions * n_states];
    let mut reward = vec![0.0; n_states * n_actions];
    let mut terminal = vec![false; n_states];
    for t in terminal.iter_mut().skip(1) {
        *t = rng.gen_bool(0.2);
    }
    for s in 0..n_states {
        for a in 0..n_actions {
            reward[s * n_actions + a] = rng.gen_range(-1.0..1.0);
            let row = &mut transition[(s * n_actions + a) * n_states..][..n_states];
            let mut sum = 0.0;
            for p in row.iter_mut() {
                *p = rng.gen_range(0.01..1.0);
                sum += *p;
            }
            for p in row.iter_mut() {
                *p /= sum;
            }
            // Exact renormalization so the row sums to 1 within 1e-12.
            let correction: f64 = row.iter().sum();
            row[n_states - 1] += 1.0 - correction;
        }
    }
    TabularMdp::new(n_states, n_actions, transition, reward, terminal, gamma)
}
