//! After-the-fact checks of a solve trace against exact quantities.

use super::SolveOutcome;
use crate::bounds;
use crate::error::{Error, Result};
use crate::lagrangian::surrogate_grad_x;
use crate::model::{SmoothnessConstants, StackelbergProblem};
use crate::oracle::GroundTruth;
use crate::scalar::Scalar;
use crate::vector;

/// Absolute slack allowed on inequalities checked in difference form.
pub const VIOLATION_TOLERANCE: f64 = 1e-9;

/// One inequality family checked along a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceCheck {
    pub name: &'static str,
    /// Largest `lhs − rhs` (difference checks) or `lhs / rhs` (ratio checks).
    pub worst: f64,
    /// Whether `worst` is a ratio rather than a difference.
    pub ratio: bool,
    pub evaluated: usize,
    pub pass: bool,
}

impl TraceCheck {
    fn difference(name: &'static str) -> Self {
        Self {
            name,
            worst: f64::NEG_INFINITY,
            ratio: false,
            evaluated: 0,
            pass: true,
        }
    }

    fn ratio(name: &'static str) -> Self {
        Self {
            name,
            worst: 0.0,
            ratio: true,
            evaluated: 0,
            pass: true,
        }
    }

    fn record_difference(&mut self, lhs: f64, rhs: f64) {
        let v = lhs - rhs;
        let v = if v.is_nan() { f64::INFINITY } else { v };
        self.worst = self.worst.max(v);
        self.evaluated += 1;
        self.pass = self.worst <= VIOLATION_TOLERANCE;
    }

    fn record_ratio(&mut self, lhs: f64, rhs: f64) {
        let r = if rhs > 0.0 {
            lhs / rhs
        } else if lhs <= 1e-14 {
            0.0
        } else {
            f64::INFINITY
        };
        let r = if r.is_nan() { f64::INFINITY } else { r };
        self.worst = self.worst.max(r);
        self.evaluated += 1;
        self.pass = self.worst <= 1.0 + crate::oracle::RATIO_TOLERANCE;
    }
}

fn f64s<T: Scalar>(v: &[T]) -> Vec<f64> {
    vector::to_f64(v)
}

/// Smoothness descent along the trace, with `d_t = ∇_x L̃ − ∇F(x_t)`:
/// per step `F(x_{t+1}) − F(x_t) ≤ −(η/2)‖∇F‖² + (η/2)‖d_t‖²`, its telescoped
/// sum, and the averaged form `(η/4) Σ‖∇F‖² ≤ F(x_0) − F* + η Σ ¼‖d_t‖²`.
pub fn descent_check<T: Scalar>(
    outcome: &SolveOutcome<T>,
    eta: T,
    oracle: Option<&dyn GroundTruth<T>>,
) -> Result<Vec<TraceCheck>> {
    let oracle = oracle.ok_or_else(|| Error::Unsupported("descent check needs an exact oracle".into()))?;
    let eta = eta.as_f64();
    let mut per_step = TraceCheck::difference("descent");
    let mut summed = TraceCheck::difference("descent_summed");
    let mut averaged = TraceCheck::difference("descent_averaged");

    let f_star = oracle.optimal_value()?.as_f64();
    let mut f0 = None;
    let (mut sum_lhs, mut sum_rhs) = (0.0, 0.0);
    let (mut sum_grad, mut sum_err) = (0.0, 0.0);
    for s in &outcome.steps {
        let Some(x_next) = &s.x_next else { continue };
        let grad = f64s(&oracle.true_gradient(&s.x)?);
        let d = vector::sub(&f64s(&s.surrogate_grad), &grad);
        let f_now = oracle.implicit_value(&s.x)?.as_f64();
        let f_next = oracle.implicit_value(x_next)?.as_f64();
        f0.get_or_insert(f_now);
        let lhs = f_next - f_now;
        let rhs = -eta / 2.0 * vector::norm_sq(&grad) + eta / 2.0 * vector::norm_sq(&d);
        per_step.record_difference(lhs, rhs);
        sum_lhs += lhs;
        sum_rhs += rhs;
        summed.record_difference(sum_lhs, sum_rhs);
        sum_grad += vector::norm_sq(&grad);
        sum_err += vector::norm_sq(&d) / 4.0;
        averaged.record_difference(eta / 4.0 * sum_grad, f0.unwrap_or(f_now) - f_star + eta * sum_err);
    }
    Ok(vec![per_step, summed, averaged])
}

/// `‖err_t‖² ≤ E1 + E2 + E3` with the trace's inner iterates, and
/// `‖err_t‖² ≤ E3` with exact inner solutions substituted.
pub fn error_decomposition_check<T: Scalar>(
    outcome: &SolveOutcome<T>,
    problem: &StackelbergProblem<T>,
    oracle: Option<&dyn GroundTruth<T>>,
) -> Result<Vec<TraceCheck>> {
    let oracle = oracle.ok_or_else(|| Error::Unsupported("error decomposition needs an exact oracle".into()))?;
    let c = problem.constants();
    let k = problem.k();
    let mut measured = TraceCheck::difference("error_decomposition");
    let mut exact = TraceCheck::difference("exact_inner_error");
    for s in &outcome.steps {
        let grad = oracle.true_gradient(&s.x)?;
        let y_star = oracle.followers_equilibrium(&s.x)?;
        let y_lambda = oracle.lagrangian_minimizer(s.lambda, &s.x)?;
        let (e1, e2, e3) = bounds::error_terms(
            c,
            k,
            s.lambda,
            vector::dist(&s.y_next, &y_lambda),
            vector::dist(&s.z_next, &y_star),
        );
        let err = vector::norm_sq(&vector::sub(&f64s(&s.surrogate_grad), &f64s(&grad))) / 4.0;
        measured.record_difference(err, (e1 + e2 + e3).as_f64());

        let ideal = surrogate_grad_x(problem, s.lambda, &s.x, &y_lambda, &y_star)?;
        let err = vector::norm_sq(&vector::sub(&f64s(&ideal), &f64s(&grad))) / 4.0;
        exact.record_difference(err, e3.as_f64());
    }
    Ok(vec![measured, exact])
}

/// `‖x_{t+1} − x_t‖ ≤ η (ℓ_f0 + 2k ℓ_g0)`.
pub fn leader_step_check<T: Scalar>(
    outcome: &SolveOutcome<T>,
    constants: &SmoothnessConstants<T>,
    k: usize,
) -> TraceCheck {
    let mut check = TraceCheck::ratio("leader_step");
    let bound = bounds::leader_step_bound(constants, k, outcome.eta).as_f64();
    for s in &outcome.steps {
        if let Some(next) = &s.x_next {
            check.record_ratio(vector::dist(next, &s.x).as_f64(), bound);
        }
    }
    check
}

/// `‖y_{t+1} − z_{t+1}‖ ≤ ‖y_{t+1} − y*(x_t)‖ + ‖V(x_t, z_{t+1})‖/μ_g`.
pub fn inner_triangle_check<T: Scalar>(
    outcome: &SolveOutcome<T>,
    constants: &SmoothnessConstants<T>,
    oracle: Option<&dyn GroundTruth<T>>,
) -> Result<TraceCheck> {
    let oracle = oracle.ok_or_else(|| Error::Unsupported("inner triangle check needs an exact oracle".into()))?;
    let mut check = TraceCheck::ratio("inner_triangle");
    for s in &outcome.steps {
        let y_star = oracle.followers_equilibrium(&s.x)?;
        let lhs = vector::dist(&s.y_next, &s.z_next).as_f64();
        let rhs = (vector::dist(&s.y_next, &y_star) + s.z_operator_norm / constants.mu_g).as_f64();
        check.record_ratio(lhs, rhs);
    }
    Ok(check)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HorizonReport {
    /// Zero-based index of the first iterate with `‖∇F‖ ≤ eps`.
    pub first_hit: Option<usize>,
    /// `4 ℓ_F1 (F(x_0) − F*) + 4 Σ ‖err_t‖²`.
    pub c_f: f64,
    /// `C_F / eps²`.
    pub horizon: f64,
    pub pass: bool,
}

/// The first iterate reaching `‖∇F‖ ≤ eps` must come no later than `C_F/eps²`.
pub fn horizon_check<T: Scalar>(
    outcome: &SolveOutcome<T>,
    constants: &SmoothnessConstants<T>,
    eps: f64,
    oracle: Option<&dyn GroundTruth<T>>,
) -> Result<HorizonReport> {
    let oracle = oracle.ok_or_else(|| Error::Unsupported("horizon check needs an exact oracle".into()))?;
    let Some(first) = outcome.trace.first() else {
        return Err(Error::InvalidParameter("empty trace".into()));
    };
    let f0 = oracle.implicit_value(&first.x)?.as_f64();
    let f_star = oracle.optimal_value()?.as_f64();
    let mut err_sum = 0.0;
    let mut first_hit = None;
    for (i, r) in outcome.trace.iter().enumerate() {
        let grad = oracle.true_gradient(&r.x)?;
        if first_hit.is_none() && vector::norm(&grad).as_f64() <= eps {
            first_hit = Some(i);
        }
        let s = &outcome.steps[i];
        err_sum += vector::norm_sq(&vector::sub(&f64s(&s.surrogate_grad), &f64s(&grad))) / 4.0;
    }
    let c_f = 4.0 * constants.hypergradient_smoothness().as_f64() * (f0 - f_star) + 4.0 * err_sum;
    let horizon = c_f / (eps * eps);
    let pass = match first_hit {
        Some(i) => i as f64 <= horizon,
        None => (outcome.trace.len() as f64) < horizon,
    };
    Ok(HorizonReport {
        first_hit,
        c_f,
        horizon,
        pass,
    })
}

/// Every oracle-backed trace check.
pub fn verify_trace<T: Scalar>(
    outcome: &SolveOutcome<T>,
    problem: &StackelbergProblem<T>,
    oracle: &dyn GroundTruth<T>,
) -> Result<Vec<TraceCheck>> {
    let c = problem.constants();
    let mut out = descent_check(outcome, outcome.eta, Some(oracle))?;
    out.extend(error_decomposition_check(outcome, problem, Some(oracle))?);
    out.push(leader_step_check(outcome, c, problem.k()));
    out.push(inner_triangle_check(outcome, c, Some(oracle))?);
    Ok(out)
}
