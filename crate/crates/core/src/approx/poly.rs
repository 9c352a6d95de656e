//! Polynomial least-squares regression in one variable.

use super::ApproxError;
use crate::linalg::solve_pivoted;
use serde::{Deserialize, Serialize};

/// A univariate polynomial `p(s) = Σ_k coefficients[k] · s^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyRegressor {
    degree: usize,
    coefficients: Vec<f64>,
}

impl PolyRegressor {
    pub fn new(coefficients: Vec<f64>) -> Self {
        assert!(!coefficients.is_empty(), "a polynomial needs at least the constant term");
        Self { degree: coefficients.len() - 1, coefficients }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficient of `s^k` at index `k`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }
}

/// Evaluates the polynomial at `state` by Horner's scheme.
pub fn poly_eval(model: &PolyRegressor, state: f64) -> f64 {
    let mut acc = 0.0;
    for &c in model.coefficients.iter().rev() {
        acc = acc * state + c;
    }
    acc
}

/// Fits the least-squares polynomial of the given degree to `samples`.
///
/// States are rescaled to [-1, 1] before forming powers; degree-6 Vandermonde
/// systems on integer grids like -6..6 are otherwise too ill-conditioned for
/// the 1e-8 accuracy the bias study needs. The scaled solution is expanded
/// back to coefficients of the raw state, so the returned polynomial obeys
/// the plain `Σ c_k s^k` convention.
///
/// Errors with [`ApproxError::RankDeficient`] when fewer distinct states than
/// `degree + 1` are present (no unique minimizer).
pub fn poly_fit(samples: &[(f64, f64)], degree: usize) -> Result<PolyRegressor, ApproxError> {
    if samples.is_empty() {
        return Err(ApproxError::EmptySamples);
    }
    let distinct = count_distinct(samples);
    if distinct < degree + 1 {
        return Err(ApproxError::RankDeficient { distinct, degree });
    }

    let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(s, _)| {
        (lo.min(s), hi.max(s))
    });
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    if half == 0.0 {
        // Single distinct state; only a constant fit is determined.
        debug_assert_eq!(degree, 0);
        let mean = samples.iter().map(|&(_, y)| y).sum::<f64>() / samples.len() as f64;
        return Ok(PolyRegressor::new(vec![mean]));
    }

    // Normal equations G c = rhs in the scaled variable t = (s - mid) / half.
    let n = degree + 1;
    let mut gram = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    let mut powers = vec![0.0; n];
    for &(s, y) in samples {
        let t = (s - mid) / half;
        let mut p = 1.0;
        for slot in powers.iter_mut() {
            *slot = p;
            p *= t;
        }
        for i in 0..n {
            rhs[i] += powers[i] * y;
            for j in 0..n {
                gram[i * n + j] += powers[i] * powers[j];
            }
        }
    }
    let scaled = solve_pivoted(&mut gram, &mut rhs, n, 1e-12)
        .ok_or(ApproxError::RankDeficient { distinct, degree })?;

    Ok(PolyRegressor::new(expand_to_raw_basis(&scaled, 1.0 / half, -mid / half)))
}

/// Rewrites `p(t) = Σ c_k t^k` with `t = a·s + b` as coefficients of `s^j`
/// via the binomial expansion of `(a·s + b)^k`.
fn expand_to_raw_basis(scaled: &[f64], a: f64, b: f64) -> Vec<f64> {
    let n = scaled.len();
    let mut raw = vec![0.0; n];
    // binom[j] walks Pascal's row for each k.
    for (k, &ck) in scaled.iter().enumerate() {
        let mut binom = 1.0;
        for j in 0..=k {
            raw[j] += ck * binom * a.powi(j as i32) * b.powi((k - j) as i32);
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }
    raw
}

fn count_distinct(samples: &[(f64, f64)]) -> usize {
    let mut states: Vec<f64> = samples.iter().map(|&(s, _)| s).collect();
    states.sort_by(|a, b| a.partial_cmp(b).expect("non-finite state"));
    states.dedup();
    states.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: solve the *raw* normal equations (no rescaling)
    /// with Gauss-Jordan elimination. Written against the operation's
    /// definition, not its implementation.
    fn normal_equations_oracle(samples: &[(f64, f64)], degree: usize) -> Vec<f64> {
        let n = degree + 1;
        let mut a = vec![vec![0.0; n + 1]; n];
        for &(s, y) in samples {
            let powers: Vec<f64> = (0..n).map(|k| s.powi(k as i32)).collect();
            for i in 0..n {
                for j in 0..n {
                    a[i][j] += powers[i] * powers[j];
                }
                a[i][n] += powers[i] * y;
            }
        }
        // Gauss-Jordan with partial pivoting on the augmented matrix.
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&r1, &r2| a[r1][col].abs().partial_cmp(&a[r2][col].abs()).unwrap())
                .unwrap();
            a.swap(col, pivot_row);
            let pivot = a[col][col];
            assert!(pivot.abs() > 1e-9, "oracle hit a singular system");
            for j in col..=n {
                a[col][j] /= pivot;
            }
            for row in 0..n {
                if row != col && a[row][col] != 0.0 {
                    let factor = a[row][col];
                    for j in col..=n {
                        a[row][j] -= factor * a[col][j];
                    }
                }
            }
        }
        (0..n).map(|i| a[i][n]).collect()
    }

    #[test]
    fn constant_fit_of_constant_data() {
        let fit = poly_fit(&[(0.0, 3.0), (1.0, 3.0), (2.0, 3.0)], 0).unwrap();
        assert_eq!(fit.coefficients().len(), 1);
        assert!((fit.coefficients()[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn interpolation_when_counts_match() {
        // 7 distinct points from s^2, degree 6: residual 0 at all points.
        let samples: Vec<(f64, f64)> = (-3..=3).map(|s| (s as f64, (s * s) as f64)).collect();
        let fit = poly_fit(&samples, 6).unwrap();
        for &(s, y) in &samples {
            assert!((poly_eval(&fit, s) - y).abs() < 1e-9, "residual at s={s}");
        }
    }

    #[test]
    fn sine_fit_matches_independent_normal_equations_solve() {
        let samples: Vec<(f64, f64)> = (-5..=5).map(|s| (s as f64, (s as f64).sin())).collect();
        let fit = poly_fit(&samples, 6).unwrap();
        let oracle = normal_equations_oracle(&samples, 6);
        for (k, (&got, &want)) in fit.coefficients().iter().zip(oracle.iter()).enumerate() {
            assert!((got - want).abs() < 1e-8, "coefficient {k}: {got} vs oracle {want}");
        }
        // Spot pins computed with an offline normal-equations solve.
        assert!((fit.coefficients()[1] - 0.849_978_378_963_805_6).abs() < 1e-8);
        assert!((fit.coefficients()[3] - -0.109_855_333_320_747_71).abs() < 1e-8);
        assert!((fit.coefficients()[5] - 0.002_732_690_957_157_892).abs() < 1e-8);
    }

    #[test]
    fn rank_deficiency_is_an_error() {
        // 3 distinct states cannot determine a cubic.
        let samples = [(0.0, 1.0), (1.0, 2.0), (2.0, 3.0), (1.0, 2.0)];
        match poly_fit(&samples, 3) {
            Err(ApproxError::RankDeficient { distinct: 3, degree: 3 }) => {}
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn empty_samples_is_an_error() {
        assert_eq!(poly_fit(&[], 0), Err(ApproxError::EmptySamples));
    }

    #[test]
    fn single_state_constant_fit() {
        let fit = poly_fit(&[(2.0, 5.0), (2.0, 7.0)], 0).unwrap();
        assert!((fit.coefficients()[0] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn eval_examples() {
        assert_eq!(poly_eval(&PolyRegressor::new(vec![1.0, 2.0]), 3.0), 7.0);
        assert_eq!(poly_eval(&PolyRegressor::new(vec![4.0, 9.0, -1.0]), 0.0), 4.0);
        assert_eq!(poly_eval(&PolyRegressor::new(vec![0.0, 0.0, 1.0]), -2.0), 4.0);
    }

    #[test]
    fn fit_is_a_local_minimum_of_squared_residuals() {
        // Perturbing any coefficient by ±1e-3 never decreases the loss.
        let samples: Vec<(f64, f64)> =
            (-6..=6).map(|s| (s as f64, 2.0 * (-(s as f64).powi(2)).exp())).collect();
        let fit = poly_fit(&samples, 6).unwrap();
        let sse = |coeffs: &[f64]| {
            let p = PolyRegressor::new(coeffs.to_vec());
            samples.iter().map(|&(s, y)| (poly_eval(&p, s) - y).powi(2)).sum::<f64>()
        };
        let base = sse(fit.coefficients());
        for k in 0..fit.coefficients().len() {
            for sign in [-1.0, 1.0] {
                let mut perturbed = fit.coefficients().to_vec();
                perturbed[k] += sign * 1e-3;
                assert!(
                    sse(&perturbed) >= base - 1e-12,
                    "perturbing c[{k}] by {sign}e-3 decreased the loss"
                );
            }
        }
    }
}
