//! Differentiable function approximators.
//!
//! Three families live here: polynomial least-squares regressors for the
//! deterministic overestimation testbed, small fully connected networks with
//! hand-written backpropagation for Q-heads, and the dueling aggregation that
//! splits Q into a state value plus mean-centered advantages.
//!
//! Everything is `f64`. Parameter vectors are flat with a deterministic
//! (layer, row, column) layout so that two networks built from the same spec
//! can be compared and copied element-wise.

mod dueling;
mod mlp;
mod model;
mod poly;

pub use dueling::{dueling_aggregate, DuelingHead, DuelingSpec};
pub use mlp::{
    mlp_backward, mlp_backward_full, mlp_forward, Activation, Layout, MlpSpec, ParamVector,
};
pub use model::QModel;
pub use poly::{poly_eval, poly_fit, PolyRegressor};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ApproxError {
    /// The normal equations of a polynomial fit are rank deficient: fewer
    /// distinct states than coefficients, or a vanishing pivot.
    #[error("rank-deficient fit: {distinct} distinct states for degree {degree} (need {})", degree + 1)]
    RankDeficient { distinct: usize, degree: usize },
    #[error("empty sample set")]
    EmptySamples,
}
