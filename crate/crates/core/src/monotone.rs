//! Last-iterate solver for the followers' strongly monotone game at fixed `x`.

use crate::error::{check_len, Error, Result};
use crate::model::{game_operator, StackelbergProblem};
use crate::scalar::Scalar;
use crate::vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MonotoneMethod {
    #[default]
    Extragradient,
    SimultaneousGd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneSolveConfig<T> {
    pub method: MonotoneMethod,
    pub step: T,
    pub max_iters: usize,
    /// Stop once the natural residual is at most `tol`. Zero forces `max_iters` steps.
    pub tol: T,
}

impl<T: Scalar> MonotoneSolveConfig<T> {
    /// Extragradient with step `1/(2 ℓ_g1)`.
    pub fn for_problem(problem: &StackelbergProblem<T>, max_iters: usize, tol: T) -> Self {
        Self {
            method: MonotoneMethod::Extragradient,
            step: T::one() / (T::lit(2.0) * problem.constants().ell_g1),
            max_iters,
            tol,
        }
    }

    pub fn validate(&self, ell_g1: T) -> Result<()> {
        if !(self.step > T::zero()) || self.step > T::one() / ell_g1 {
            return Err(Error::InvalidParameter(format!(
                "monotone solver step {} must lie in (0, 1/ell_g1]",
                self.step
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter(
                "monotone solver needs at least one iteration".into(),
            ));
        }
        if !(self.tol >= T::zero()) {
            return Err(Error::InvalidParameter(
                "monotone solver tolerance must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneSolveResult<T> {
    pub z: Vec<T>,
    pub iters_used: usize,
    /// `‖V(x, z)‖` at the returned point.
    pub final_operator_norm: T,
    /// `‖z − P(z − step·V(x, z))‖ / step`; equals the operator norm without boxes.
    pub natural_residual: T,
    pub grad_evals: usize,
}

fn operator<T: Scalar>(problem: &StackelbergProblem<T>, x: &[T], z: &[T]) -> Result<Vec<T>> {
    let v = game_operator(problem, x, z)?;
    if !vector::all_finite(&v) {
        return Err(Error::NumericFailure {
            context: "game operator",
            iterate: vector::to_f64(z),
        });
    }
    Ok(v)
}

fn forward<T: Scalar>(problem: &StackelbergProblem<T>, z: &[T], step: T, v: &[T]) -> Vec<T> {
    let mut out = vector::sub_scaled(z, step, v);
    problem.project_y(&mut out);
    out
}

/// `z − s·V(x, z − s·V(x, z))`, each step projected when boxes are present.
pub fn extragradient_step<T: Scalar>(problem: &StackelbergProblem<T>, x: &[T], z: &[T], step: T) -> Result<Vec<T>> {
    if !(step > T::zero()) {
        return Err(Error::InvalidParameter("extragradient step must be positive".into()));
    }
    let v = operator(problem, x, z)?;
    let mid = forward(problem, z, step, &v);
    let v_mid = operator(problem, x, &mid)?;
    Ok(forward(problem, z, step, &v_mid))
}

/// Runs the configured method from `z_init`. Every operator evaluation costs
/// `k` gradient evaluations, including the one certifying the returned point.
pub fn solve_followers_game<T: Scalar>(
    problem: &StackelbergProblem<T>,
    x: &[T],
    z_init: &[T],
    config: &MonotoneSolveConfig<T>,
) -> Result<MonotoneSolveResult<T>> {
    config.validate(problem.constants().ell_g1)?;
    check_len("equilibrium estimate", problem.layout().total(), z_init.len())?;
    let k = problem.k();
    let step = config.step;
    let mut z = z_init.to_vec();
    let mut v = operator(problem, x, &z)?;
    let mut grad_evals = k;
    let mut iters_used = 0;
    let natural = |z: &[T], v: &[T]| vector::dist(&forward(problem, z, step, v), z) / step;
    let mut residual = natural(&z, &v);
    while iters_used < config.max_iters && !(config.tol > T::zero() && residual <= config.tol) {
        z = match config.method {
            MonotoneMethod::Extragradient => {
                let mid = forward(problem, &z, step, &v);
                let v_mid = operator(problem, x, &mid)?;
                grad_evals += k;
                forward(problem, &z, step, &v_mid)
            }
            MonotoneMethod::SimultaneousGd => forward(problem, &z, step, &v),
        };
        v = operator(problem, x, &z)?;
        grad_evals += k;
        iters_used += 1;
        residual = natural(&z, &v);
    }
    Ok(MonotoneSolveResult {
        final_operator_norm: vector::norm(&v),
        natural_residual: residual,
        z,
        iters_used,
        grad_evals,
    })
}
