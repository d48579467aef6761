//! Closed-form error bounds of the penalty reformulation, as functions of the
//! declared constants. The oracle checks compare measured quantities to these.

use crate::model::SmoothnessConstants;
use crate::scalar::Scalar;

/// Smallest multiplier for which the penalized Lagrangian is `(μ_g λ / 2)`-strongly
/// convex in `y`: `2 ℓ_f1 / μ_g`.
pub fn lambda_threshold<T: Scalar>(c: &SmoothnessConstants<T>) -> T {
    T::lit(2.0) * c.ell_f1 / c.mu_g
}

/// Per-block distance bound between the Lagrangian minimizer and the
/// followers' equilibrium: `2 ℓ_f0 / (λ μ_g)`.
pub fn minimizer_gap_bound<T: Scalar>(c: &SmoothnessConstants<T>, lambda: T) -> T {
    T::lit(2.0) * c.ell_f0 / (lambda * c.mu_g)
}

/// Coefficients `(a, b)` of the three-term gradient bound
/// `a Σ‖Δ_i‖ + b Σ‖Δ_i‖²`, with `Δ_i = y_i − y*_i(x)`.
pub fn three_term_coefficients<T: Scalar>(c: &SmoothnessConstants<T>, k: usize, lambda: T) -> (T, T) {
    let kk = T::from_usize_lossy(k);
    let a = c.ell_f1 + c.ell_g1 * c.ell_f1 * kk / c.mu_g;
    let b = lambda * c.ell_g1 + T::lit(2.0) * lambda * c.ell_g1 * c.ell_g1 / c.mu_g;
    (a, b)
}

/// Right side of the three-term bound for given per-block distances.
pub fn three_term_bound<T: Scalar>(c: &SmoothnessConstants<T>, lambda: T, block_dists: &[T]) -> T {
    let (a, b) = three_term_coefficients(c, block_dists.len(), lambda);
    let s1: T = block_dists.iter().copied().sum();
    let s2: T = block_dists.iter().map(|&d| d * d).sum();
    a * s1 + b * s2
}

/// Bound on `‖∇F(x) − ∇ℒ*_λ(x)‖`: the three-term bound with every block
/// distance replaced by [`minimizer_gap_bound`].
pub fn hypergradient_gap_bound<T: Scalar>(c: &SmoothnessConstants<T>, k: usize, lambda: T) -> T {
    let r = minimizer_gap_bound(c, lambda);
    let (a, b) = three_term_coefficients(c, k, lambda);
    let kk = T::from_usize_lossy(k);
    kk * a * r + kk * b * r * r
}

/// Penalty constant `C_λ` with `hypergradient_gap_bound = k C_λ / λ`, so that
/// `E3 = k² C_λ² / λ²` is the squared gap bound.
pub fn penalty_constant<T: Scalar>(c: &SmoothnessConstants<T>, k: usize, lambda: T) -> T {
    hypergradient_gap_bound(c, k, lambda) * lambda / T::from_usize_lossy(k)
}

/// Per-block bound on `‖y*_{λ1}(x1) − y*_{λ2}(x2)‖` for `λ2 ≥ λ1 ≥` threshold.
pub fn minimizer_sensitivity_bound<T: Scalar>(c: &SmoothnessConstants<T>, dx: T, lambda1: T, lambda2: T) -> T {
    (dx * (c.ell_f1 + c.ell_g1 * lambda2) + (lambda2 - lambda1) * c.ell_f0 / lambda1) * T::lit(2.0) / (c.mu_g * lambda2)
}

/// Bound on one projected leader step: `η (ℓ_f0 + 2k ℓ_g0)`.
pub fn leader_step_bound<T: Scalar>(c: &SmoothnessConstants<T>, k: usize, eta: T) -> T {
    eta * (c.ell_f0 + T::lit(2.0) * T::from_usize_lossy(k) * c.ell_g0)
}

/// Error terms `(E1, E2, E3)` bounding `‖err_t‖²` at one outer iteration,
/// given `‖y_{t+1} − y*_λ(x_t)‖` and `‖z_{t+1} − y*(x_t)‖`.
pub fn error_terms<T: Scalar>(c: &SmoothnessConstants<T>, k: usize, lambda: T, y_dist: T, z_dist: T) -> (T, T, T) {
    let kk = T::from_usize_lossy(k);
    let k2l2 = kk * kk * lambda * lambda;
    let e1 = (c.ell_f1 * c.ell_f1 + T::lit(5.0) * k2l2) * y_dist * y_dist;
    let e2 = T::lit(2.0) * k2l2 * z_dist * z_dist;
    let cl = penalty_constant(c, k, lambda);
    let e3 = kk * kk * cl * cl / (lambda * lambda);
    (e1, e2, e3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> SmoothnessConstants<f64> {
        SmoothnessConstants {
            mu_g: 1.0,
            ell_f0: 1.0,
            ell_f1: 1.0,
            ell_g0: 1.0,
            ell_g1: 1.0,
            ell_g2: 0.0,
        }
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(lambda_threshold(&unit()), 2.0);
        let c = SmoothnessConstants {
            ell_f1: 3.0,
            mu_g: 2.0,
            ell_g1: 3.0,
            ..unit()
        };
        assert_eq!(lambda_threshold(&c), 3.0);
        let c = SmoothnessConstants {
            ell_f1: 0.7,
            mu_g: 0.7,
            ..unit()
        };
        assert_relative_eq!(lambda_threshold(&c), 2.0);
    }

    #[test]
    fn gap_bound_matches_expanded_form() {
        let c = SmoothnessConstants { ell_g1: 2.0, ..unit() };
        let k = 2;
        let lambda = 8.0;
        let r = 2.0 / 8.0;
        let expected = 2.0 * (1.0 + 2.0 * 2.0) * r + 2.0 * (8.0 * 2.0 + 2.0 * 8.0 * 4.0) * r * r;
        assert_relative_eq!(hypergradient_gap_bound(&c, k, lambda), expected);
        let e3 = error_terms(&c, k, lambda, 0.0, 0.0).2;
        assert_relative_eq!(e3, expected * expected, max_relative = 1e-14);
    }

    #[test]
    fn gap_bound_decays_like_inverse_lambda() {
        let c = unit();
        let b1 = hypergradient_gap_bound(&c, 3, 1e6);
        let b2 = hypergradient_gap_bound(&c, 3, 2e6);
        assert_relative_eq!(b1 / b2, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn sensitivity_reduces_to_minimizer_gap_shape() {
        let c = unit();
        assert_eq!(minimizer_sensitivity_bound(&c, 0.0, 4.0, 4.0), 0.0);
        assert_relative_eq!(minimizer_sensitivity_bound(&c, 1.0, 2.0, 2.0), 3.0 * 2.0 / 2.0);
    }
}
