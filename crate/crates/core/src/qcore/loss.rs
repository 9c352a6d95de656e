//! The hindsight loss and its smoothed-reward form.
//!
//! The loss adds a backward term to the usual squared TD error:
//!
//! ```text
//! L(q) = (ŷ - q)² + δ·(ȳ - q)²
//! ```
//!
//! with ŷ the bootstrapped target, ȳ the stored behavior-time value of the
//! same (state, action), and δ the hindsight coefficient. Completing the
//! square shows L is, up to a constant in q, the single squared error
//! against the smoothed reward `r_new = (ŷ + δ·ȳ) / (1 + δ)`.

/// `r_new = (y_hat + delta * y_bar) / (1 + delta)`.
///
/// Panics when `delta <= -1` (the division is undefined or flips sign).
pub fn smoothed_reward(y_hat: f64, y_bar: f64, delta: f64) -> f64 {
    assert!(delta > -1.0, "delta must be > -1, got {delta}");
    (y_hat + delta * y_bar) / (1.0 + delta)
}

/// `(y_hat - q)² + delta * (y_bar - q)²`.
pub fn hindsight_loss(q: f64, y_hat: f64, y_bar: f64, delta: f64) -> f64 {
    debug_assert!(delta > -1.0);
    let forward = y_hat - q;
    let backward = y_bar - q;
    forward * forward + delta * backward * backward
}

/// Exact ∂/∂q of [`hindsight_loss`] in completed-square form:
/// `2(1+δ)(q - r_new)`.
pub fn hindsight_loss_grad_q(q: f64, y_hat: f64, y_bar: f64, delta: f64) -> f64 {
    2.0 * (1.0 + delta) * (q - smoothed_reward(y_hat, y_bar, delta))
}
