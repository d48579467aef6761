//! The z-parameterized penalty Lagrangian
//! `L̃_λ(x, y, z) = f(x, y) + λ Σ_i (g_i(x, y_i, z_{−i}) − g_i(x, z))`
//! and its first-order inner minimizer.

use crate::bounds;
use crate::error::{check_len, Error, Result};
use crate::model::{SmoothnessConstants, StackelbergProblem};
use crate::scalar::Scalar;
use crate::vector;

pub use crate::bounds::lambda_threshold;

/// Penalty multiplier with the strong convexity and smoothness of `L̃_λ` in `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyState<T> {
    pub lambda: T,
    /// `μ_g λ / 2`.
    pub mu_l: T,
    /// `ℓ_f1 + k λ ℓ_g1`.
    pub ell_l: T,
}

impl<T: Scalar> PenaltyState<T> {
    /// Refuses multipliers below [`lambda_threshold`], where `L̃_λ` may fail to be
    /// strongly convex in `y`.
    pub fn new(constants: &SmoothnessConstants<T>, k: usize, lambda: T) -> Result<Self> {
        let threshold = lambda_threshold(constants);
        if !(lambda >= threshold) || !lambda.is_finite() {
            return Err(Error::ConvexityViolation {
                lambda: lambda.as_f64(),
                threshold: threshold.as_f64(),
            });
        }
        Ok(Self {
            lambda,
            mu_l: constants.mu_g * lambda / T::lit(2.0),
            ell_l: constants.ell_f1 + T::from_usize_lossy(k) * lambda * constants.ell_g1,
        })
    }

    /// Step `2 / (μ_l + ℓ_l)`.
    pub fn gd_step(&self) -> T {
        T::lit(2.0) / (self.mu_l + self.ell_l)
    }

    /// Per-step contraction `1 − 2μ_l / (μ_l + ℓ_l)` of GD at [`Self::gd_step`].
    pub fn contraction(&self) -> T {
        T::one() - T::lit(2.0) * self.mu_l / (self.mu_l + self.ell_l)
    }
}

fn check_args<T: Scalar>(problem: &StackelbergProblem<T>, lambda: T, x: &[T], y: &[T], z: &[T]) -> Result<()> {
    if !(lambda > T::zero()) {
        return Err(Error::InvalidParameter("penalty multiplier must be positive".into()));
    }
    problem.check_point(x, y)?;
    check_len("equilibrium estimate", problem.layout().total(), z.len())
}

/// `z` with block `i` replaced by the same block of `y`.
fn mixed<T: Scalar>(problem: &StackelbergProblem<T>, i: usize, y: &[T], z: &[T]) -> Vec<T> {
    let mut w = z.to_vec();
    let b = problem.layout().block(i);
    w[b.clone()].copy_from_slice(&y[b]);
    w
}

pub fn surrogate_value<T: Scalar>(problem: &StackelbergProblem<T>, lambda: T, x: &[T], y: &[T], z: &[T]) -> Result<T> {
    check_args(problem, lambda, x, y, z)?;
    let mut penalty = T::zero();
    for i in 0..problem.k() {
        let g = problem.follower(i);
        penalty = penalty + g.value(x, &mixed(problem, i, y, z)) - g.value(x, z);
    }
    Ok(problem.leader().value(x, y) + lambda * penalty)
}

/// Block `i`: `∇_{y_i} f(x, y) + λ ∇_{y_i} g_i(x, y_i, z_{−i})`. Costs `1 + k`
/// gradient evaluations.
pub fn surrogate_grad_y<T: Scalar>(
    problem: &StackelbergProblem<T>,
    lambda: T,
    x: &[T],
    y: &[T],
    z: &[T],
) -> Result<Vec<T>> {
    check_args(problem, lambda, x, y, z)?;
    let layout = problem.layout();
    let mut grad = problem.leader().grad_y(x, y);
    check_len("leader y-gradient", layout.total(), grad.len())?;
    for i in 0..layout.k() {
        let own = problem.follower(i).grad_own(x, &mixed(problem, i, y, z));
        check_len("follower own gradient", layout.dims()[i], own.len())?;
        vector::axpy(&mut grad[layout.block(i)], lambda, &own);
    }
    Ok(grad)
}

/// `∇_x f(x, y) + λ Σ ∇_x g_i(x, y_i, z_{−i}) − λ Σ ∇_x g_i(x, z)`. Costs
/// `1 + 2k` gradient evaluations.
pub fn surrogate_grad_x<T: Scalar>(
    problem: &StackelbergProblem<T>,
    lambda: T,
    x: &[T],
    y: &[T],
    z: &[T],
) -> Result<Vec<T>> {
    check_args(problem, lambda, x, y, z)?;
    let n0 = problem.layout().n0();
    let mut grad = problem.leader().grad_x(x, y);
    check_len("leader x-gradient", n0, grad.len())?;
    for i in 0..problem.k() {
        let g = problem.follower(i);
        let at_mixed = g.grad_x(x, &mixed(problem, i, y, z));
        let at_z = g.grad_x(x, z);
        check_len("follower x-gradient", n0, at_mixed.len())?;
        check_len("follower x-gradient", n0, at_z.len())?;
        vector::axpy(&mut grad, lambda, &at_mixed);
        vector::axpy(&mut grad, -lambda, &at_z);
    }
    Ok(grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolve<T> {
    pub y: Vec<T>,
    /// GD steps taken.
    pub iters: usize,
    pub grad_evals: usize,
    /// Norm of the (projected) gradient mapping at the returned point.
    pub final_grad_norm: T,
}

/// Projected GD on `y ↦ L̃_λ(x, y, z)` with step `2/(μ_l + ℓ_l)`, for at most
/// `budget` steps or until the gradient mapping drops to `tol`.
pub fn minimize_surrogate_in_y<T: Scalar>(
    problem: &StackelbergProblem<T>,
    lambda: T,
    x: &[T],
    z: &[T],
    y_init: &[T],
    budget: usize,
    tol: T,
) -> Result<InnerSolve<T>> {
    if budget == 0 {
        return Err(Error::InvalidParameter("inner budget must be at least 1".into()));
    }
    let state = PenaltyState::new(problem.constants(), problem.k(), lambda)?;
    let step = state.gd_step();
    let per_grad = 1 + problem.k();
    let mut y = y_init.to_vec();
    let mut grad_evals = 0;
    let mut iters = 0;
    loop {
        let g = surrogate_grad_y(problem, lambda, x, &y, z)?;
        grad_evals += per_grad;
        if !vector::all_finite(&g) {
            return Err(Error::NumericFailure {
                context: "surrogate minimization",
                iterate: vector::to_f64(&y),
            });
        }
        let mut next = vector::sub_scaled(&y, step, &g);
        problem.project_y(&mut next);
        let mapping = vector::dist(&next, &y) / step;
        if mapping <= tol || iters == budget {
            return Ok(InnerSolve {
                y,
                iters,
                grad_evals,
                final_grad_norm: mapping,
            });
        }
        y = next;
        iters += 1;
    }
}

/// Upper bound on `‖∇F(x) − ∇ℒ*_λ(x)‖`; see [`bounds::hypergradient_gap_bound`].
pub fn gradient_gap_bound<T: Scalar>(constants: &SmoothnessConstants<T>, k: usize, lambda: T) -> T {
    bounds::hypergradient_gap_bound(constants, k, lambda)
}
