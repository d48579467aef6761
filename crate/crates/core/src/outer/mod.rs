//! The outer loop: follower equilibrium, surrogate minimization, leader step,
//! penalty increase.

pub mod checks;
mod schedule;

pub use schedule::{budget_my, budget_mz, schedule_lambda, ScheduleParams};

use crate::bounds;
use crate::error::{Error, Result};
use crate::lagrangian::{minimize_surrogate_in_y, surrogate_grad_x, PenaltyState};
use crate::model::{
    check_epsilon_stationary, game_operator, JointPoint, LeaderGradient, StackelbergProblem, StationarityCertificate,
};
use crate::monotone::{solve_followers_game, MonotoneMethod, MonotoneSolveConfig};
use crate::oracle::GroundTruth;
use crate::scalar::Scalar;
use crate::vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    BudgetExhausted,
    NumericFailure,
}

/// Telemetry of one outer iteration. Optional fields need an exact oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord<T> {
    pub t: usize,
    pub lambda: T,
    pub delta: T,
    pub eta: T,
    /// Scheduled budgets.
    pub m_y_budget: usize,
    pub m_z_budget: usize,
    /// Steps actually taken (early stopping may cut the budget short).
    pub m_y_used: usize,
    pub m_z_used: usize,
    pub grad_evals: usize,
    pub grad_evals_cumulative: usize,
    /// Leader iterate `x_t` at which this iteration's gradient was taken.
    pub x: Vec<T>,
    pub surrogate_grad_norm: T,
    pub true_grad_norm: Option<T>,
    pub follower_gap_max: Option<T>,
    pub e1: Option<T>,
    pub e2: Option<T>,
    pub e3: Option<T>,
    /// `¼‖∇_x L̃ − ∇F‖²`.
    pub err_sq: Option<T>,
    pub f_value: Option<T>,
}

/// Everything one iteration produced, for after-the-fact checks.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSnapshot<T> {
    pub t: usize,
    pub lambda: T,
    pub x: Vec<T>,
    pub z_next: Vec<T>,
    /// `‖V(x_t, z_{t+1})‖`.
    pub z_operator_norm: T,
    pub y_next: Vec<T>,
    pub surrogate_grad: Vec<T>,
    /// `None` when the iteration stopped before the leader step.
    pub x_next: Option<Vec<T>>,
    pub z_evals: usize,
    pub y_evals: usize,
    pub leader_evals: usize,
}

/// Receives each record as soon as it is complete.
pub trait TraceSink<T> {
    fn record(&mut self, record: &IterationRecord<T>) -> Result<()>;
}

impl<T: Clone> TraceSink<T> for Vec<IterationRecord<T>> {
    fn record(&mut self, record: &IterationRecord<T>) -> Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

/// Discards records.
pub struct NullSink;

impl<T> TraceSink<T> for NullSink {
    fn record(&mut self, _record: &IterationRecord<T>) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome<T> {
    pub status: SolveStatus,
    pub final_point: JointPoint<T>,
    /// Iterate `(x_t, z_{t+1})` with the smallest recorded gradient norm.
    pub best_iterate: JointPoint<T>,
    pub best_grad_norm: T,
    pub trace: Vec<IterationRecord<T>>,
    pub steps: Vec<StepSnapshot<T>>,
    pub certificate: Option<StationarityCertificate<T>>,
    /// Evaluations spent choosing the default `C_z`, outside any iteration.
    pub setup_evals: usize,
    pub eta: T,
    pub lambda_floor: T,
    pub c_const: T,
    pub alpha: T,
    pub failure: Option<Error>,
}

impl<T: Scalar> SolveOutcome<T> {
    pub fn total_grad_evals(&self) -> usize {
        self.trace.last().map_or(0, |r| r.grad_evals_cumulative)
    }
}

struct Iteration<T> {
    record: IterationRecord<T>,
    snapshot: StepSnapshot<T>,
    certificate: StationarityCertificate<T>,
}

/// Runs the method from `init` (`y_0 = z_0 = init.y`). With an oracle,
/// stationarity is certified with the exact `∇F`; otherwise the surrogate
/// gradient stands in.
pub fn run<T: Scalar>(
    problem: &StackelbergProblem<T>,
    params: &ScheduleParams<T>,
    init: &JointPoint<T>,
    oracle: Option<&dyn GroundTruth<T>>,
    sink: &mut dyn TraceSink<T>,
) -> Result<SolveOutcome<T>> {
    params.validate()?;
    init.validate(problem.layout())?;
    let constants = *problem.constants();
    let k = problem.k();
    let eta = params.resolved_eta(&constants);
    let floor = params.resolved_floor(&constants);

    let mut x = init.x.clone();
    problem.project_x(&mut x);
    let mut y = init.y.clone();
    problem.project_y(&mut y);
    let mut z = y.clone();

    let mut setup_evals = 0;
    let c_const = match params.c_const {
        Some(c) => c,
        None => {
            let v = game_operator(problem, &x, &z)?;
            setup_evals += k;
            T::from_usize_lossy(k) * constants.ell_g1 * T::one().max(vector::norm(&v) / constants.mu_g)
        }
    };

    let mut outcome = SolveOutcome {
        status: SolveStatus::BudgetExhausted,
        final_point: JointPoint::new(x.clone(), z.clone()),
        best_iterate: JointPoint::new(x.clone(), z.clone()),
        best_grad_norm: T::infinity(),
        trace: Vec::new(),
        steps: Vec::new(),
        certificate: None,
        setup_evals,
        eta,
        lambda_floor: floor,
        c_const,
        alpha: params.alpha(),
        failure: None,
    };
    let mut cumulative = 0;

    for t in 1..=params.t_max {
        let step = iterate(problem, params, oracle, t, floor, c_const, eta, &x, &y, &z, cumulative);
        let mut it = match step {
            Ok(it) => it,
            Err(e @ Error::NumericFailure { .. }) => {
                outcome.status = SolveStatus::NumericFailure;
                outcome.failure = Some(e);
                return Ok(outcome);
            }
            Err(e) => return Err(e),
        };
        cumulative = it.record.grad_evals_cumulative;
        sink.record(&it.record)?;

        let norm = it.certificate.gradient_norm;
        if norm < outcome.best_grad_norm {
            outcome.best_grad_norm = norm;
            outcome.best_iterate = JointPoint::new(x.clone(), it.snapshot.z_next.clone());
        }
        let stationary = it.certificate.stationary;
        outcome.certificate = Some(it.certificate);

        if stationary {
            outcome.status = SolveStatus::Converged;
            outcome.final_point = JointPoint::new(x.clone(), it.snapshot.z_next.clone());
            outcome.trace.push(it.record);
            outcome.steps.push(it.snapshot);
            return Ok(outcome);
        }

        let mut next = vector::sub_scaled(&x, eta, &it.snapshot.surrogate_grad);
        problem.project_x(&mut next);
        if !vector::all_finite(&next) {
            outcome.status = SolveStatus::NumericFailure;
            outcome.failure = Some(Error::NumericFailure {
                context: "leader step",
                iterate: vector::to_f64(&x),
            });
            outcome.trace.push(it.record);
            outcome.steps.push(it.snapshot);
            return Ok(outcome);
        }
        it.snapshot.x_next = Some(next.clone());
        y = it.snapshot.y_next.clone();
        z = it.snapshot.z_next.clone();
        x = next;
        outcome.trace.push(it.record);
        outcome.steps.push(it.snapshot);
    }
    outcome.final_point = JointPoint::new(x, z);
    Ok(outcome)
}

#[allow(clippy::too_many_arguments)]
fn iterate<T: Scalar>(
    problem: &StackelbergProblem<T>,
    params: &ScheduleParams<T>,
    oracle: Option<&dyn GroundTruth<T>>,
    t: usize,
    floor: T,
    c_const: T,
    eta: T,
    x: &[T],
    y: &[T],
    z: &[T],
    cumulative: usize,
) -> Result<Iteration<T>> {
    let constants = problem.constants();
    let k = problem.k();
    let (lambda, delta) = schedule_lambda(t, params.rho, floor, params.lambda_cap)?;
    let state = PenaltyState::new(constants, k, lambda)?;
    let m_z = budget_mz(t, k, constants.mu_g, params.rho, params.eps_prime, params.c_z, c_const);
    let m_y = budget_my(t, k, state.mu_l, state.ell_l, params.eps_prime, params.c_y);

    let z_cfg = MonotoneSolveConfig {
        method: MonotoneMethod::Extragradient,
        step: T::one() / (T::lit(2.0) * constants.ell_g1),
        max_iters: m_z,
        tol: params.z_tol / lambda,
    };
    let zs = solve_followers_game(problem, x, z, &z_cfg)?;
    let ys = minimize_surrogate_in_y(problem, lambda, x, &zs.z, y, m_y, params.y_tol / lambda)?;
    let grad = surrogate_grad_x(problem, lambda, x, &ys.y, &zs.z)?;
    let leader_evals = 1 + 2 * k;
    if !vector::all_finite(&grad) {
        return Err(Error::NumericFailure {
            context: "surrogate x-gradient",
            iterate: vector::to_f64(x),
        });
    }

    let grad_evals = zs.grad_evals + ys.grad_evals + leader_evals;
    let mut record = IterationRecord {
        t,
        lambda,
        delta,
        eta,
        m_y_budget: m_y,
        m_z_budget: m_z,
        m_y_used: ys.iters,
        m_z_used: zs.iters_used,
        grad_evals,
        grad_evals_cumulative: cumulative + grad_evals,
        x: x.to_vec(),
        surrogate_grad_norm: vector::norm(&grad),
        true_grad_norm: None,
        follower_gap_max: None,
        e1: None,
        e2: None,
        e3: None,
        err_sq: None,
        f_value: None,
    };

    let certificate = match oracle {
        Some(o) => {
            let true_grad = o.true_gradient(x)?;
            let y_star = o.followers_equilibrium(x)?;
            let y_lambda = o.lagrangian_minimizer(lambda, x)?;
            let (e1, e2, e3) = bounds::error_terms(
                constants,
                k,
                lambda,
                vector::dist(&ys.y, &y_lambda),
                vector::dist(&zs.z, &y_star),
            );
            record.true_grad_norm = Some(vector::norm(&true_grad));
            record.f_value = Some(o.implicit_value(x)?);
            record.err_sq = Some(vector::norm_sq(&vector::sub(&grad, &true_grad)) / T::lit(4.0));
            record.e1 = Some(e1);
            record.e2 = Some(e2);
            record.e3 = Some(e3);
            check_epsilon_stationary(problem, x, &zs.z, params.target_eps, LeaderGradient::True(&true_grad))?
        }
        None => check_epsilon_stationary(problem, x, &zs.z, params.target_eps, LeaderGradient::Surrogate(&grad))?,
    };
    record.follower_gap_max = Some(certificate.max_gap);

    Ok(Iteration {
        record,
        snapshot: StepSnapshot {
            t,
            lambda,
            x: x.to_vec(),
            z_next: zs.z,
            z_operator_norm: zs.final_operator_norm,
            y_next: ys.y,
            surrogate_grad: grad,
            x_next: None,
            z_evals: zs.grad_evals,
            y_evals: ys.grad_evals,
            leader_evals,
        },
        certificate,
    })
}
