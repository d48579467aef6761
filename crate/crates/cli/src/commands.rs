//! The four subcommands as library functions. Each returns its exit code with a
//! serializable result; printing is left to the caller.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use stackelberg_core::lagrangian::{surrogate_grad_x, surrogate_grad_y, surrogate_value};
use stackelberg_core::oracle::{
    check_lagrangian_strong_convexity, default_fd_step, finite_difference_grad, verify_lemma_bounds, LemmaCheck,
    LemmaGrid,
};
use stackelberg_core::outer::checks::{
    descent_check, error_decomposition_check, horizon_check, inner_triangle_check, leader_step_check, TraceCheck,
};
use stackelberg_core::outer::NullSink;
use stackelberg_core::{run, GroundTruth, Outcome, Problem, QuadraticOracle, SolveStatus};

use crate::config::RunConfig;
use crate::error::{CliError, EXIT_BUDGET, EXIT_ERROR, EXIT_OK, EXIT_VERIFY};
use crate::registry::{Registry, Resolved};
use crate::trace::{Trace, TraceMeta, TraceRow};

/// Relative error allowed between an analytic gradient and finite differences.
pub const GRADCHECK_TOLERANCE: f64 = 1e-5;
/// Default allowance above the theoretical exponent in `ratefit`.
pub const DEFAULT_RATE_SLACK: f64 = 0.05;
/// Fewer fitted points than this is an error.
pub const MIN_RATE_POINTS: usize = 5;

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Converged => "converged",
        SolveStatus::BudgetExhausted => "budget_exhausted",
        SolveStatus::NumericFailure => "numeric_failure",
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

// ---------------------------------------------------------------------------
// solve

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub problem: String,
    pub status: String,
    /// Smallest certified gradient norm, exact `‖∇F‖` when `gradient_source` is `true`.
    pub best_grad_norm: Option<f64>,
    pub gradient_source: String,
    pub max_follower_gap: Option<f64>,
    pub total_grad_evals: usize,
    /// Evaluations spent before the first iteration, outside the total.
    pub setup_grad_evals: usize,
    pub outer_iterations: usize,
    pub wall_time_s: f64,
    pub best_x: Vec<f64>,
    pub final_x: Vec<f64>,
    pub eta: f64,
    pub alpha: f64,
    pub failure: Option<String>,
    pub trace_path: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SolveRun {
    pub exit_code: i32,
    pub summary: SolveSummary,
    pub outcome: Outcome,
    pub trace: Trace,
}

fn trace_of(name: &str, k: usize, cfg: &RunConfig, outcome: &Outcome) -> Trace {
    Trace {
        meta: TraceMeta {
            problem: name.to_string(),
            k,
            rho: cfg.schedule.rho,
            eps_prime: cfg.schedule.eps_prime,
            alpha: outcome.alpha,
        },
        rows: outcome.trace.iter().map(TraceRow::from).collect(),
    }
}

fn solve_resolved(cfg: &RunConfig, resolved: &Resolved) -> Result<(Outcome, f64), CliError> {
    if let Some(why) = &resolved.invalid_constants {
        return Err(CliError::Config(format!("`constants`: {why}")));
    }
    let params = cfg.schedule.to_params()?;
    let entry = &resolved.entry;
    let oracle = resolved.oracle.as_ref().map(|o| o as &dyn GroundTruth<f64>);
    let start = Instant::now();
    let outcome = run(&entry.problem, &params, &entry.initial, oracle, &mut NullSink)?;
    Ok((outcome, start.elapsed().as_secs_f64()))
}

/// Runs the method and writes the trace to `output.trace` (and the summary to
/// `output.summary`) when set. Exit 0 on convergence, 2 when the horizon runs
/// out, 1 on a numeric failure.
pub fn solve(cfg: &RunConfig, registry: &Registry) -> Result<SolveRun, CliError> {
    let resolved = registry.resolve(&cfg.problem, &cfg.constants)?;
    let (outcome, wall) = solve_resolved(cfg, &resolved)?;
    let entry = &resolved.entry;
    let trace = trace_of(&entry.name, entry.problem.k(), cfg, &outcome);
    if let Some(path) = &cfg.output.trace {
        trace.write(path)?;
    }
    let cert = outcome.certificate.as_ref();
    let summary = SolveSummary {
        problem: entry.name.clone(),
        status: status_name(outcome.status).into(),
        best_grad_norm: finite(outcome.best_grad_norm),
        gradient_source: if resolved.oracle.is_some() { "true" } else { "surrogate" }.into(),
        max_follower_gap: cert.and_then(|c| finite(c.max_gap)),
        total_grad_evals: outcome.total_grad_evals(),
        setup_grad_evals: outcome.setup_evals,
        outer_iterations: outcome.trace.len(),
        wall_time_s: wall,
        best_x: outcome.best_iterate.x.clone(),
        final_x: outcome.final_point.x.clone(),
        eta: outcome.eta,
        alpha: outcome.alpha,
        failure: outcome.failure.as_ref().map(|e| e.to_string()),
        trace_path: cfg.output.trace.clone(),
    };
    if let Some(path) = &cfg.output.summary {
        write_json(path, &summary)?;
    }
    let exit_code = match outcome.status {
        SolveStatus::Converged => EXIT_OK,
        SolveStatus::BudgetExhausted => EXIT_BUDGET,
        SolveStatus::NumericFailure => EXIT_ERROR,
    };
    Ok(SolveRun {
        exit_code,
        summary,
        outcome,
        trace,
    })
}

// ---------------------------------------------------------------------------
// verify

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub name: String,
    /// `max_ratio` (pass at ≤ 1 + 1e-9), `max_violation` (pass at ≤ 1e-9) or
    /// `hit_over_horizon` (pass at ≤ 1).
    pub metric: String,
    /// Absent when the worst value is not finite.
    pub value: Option<f64>,
    pub evaluated: usize,
    pub pass: bool,
}

impl From<&LemmaCheck> for CheckLine {
    fn from(c: &LemmaCheck) -> Self {
        Self {
            name: c.name.into(),
            metric: "max_ratio".into(),
            value: finite(c.max_ratio),
            evaluated: c.evaluated,
            pass: c.pass,
        }
    }
}

impl From<&TraceCheck> for CheckLine {
    fn from(c: &TraceCheck) -> Self {
        Self {
            name: c.name.into(),
            metric: if c.ratio { "max_ratio" } else { "max_violation" }.into(),
            value: finite(c.worst),
            evaluated: c.evaluated,
            pass: c.pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub problem: String,
    pub pass: bool,
    pub checks: Vec<CheckLine>,
    /// Fitted log-log slope of the exact hypergradient gap against `λ`.
    pub gap_decay_slope: Option<f64>,
    pub solve_status: Option<String>,
    pub first_hit: Option<usize>,
    pub horizon: Option<f64>,
}

/// Multipliers `2, 4, …, 2^10`.
pub fn lemma_lambdas() -> Vec<f64> {
    (1..=10).map(|p| 2f64.powi(p)).collect()
}

/// 11 evenly spaced points on the diagonal of the leader box (`[−1, 1]^n0`
/// when unbounded).
pub fn lemma_grid(problem: &Problem) -> LemmaGrid {
    let n0 = problem.layout().n0();
    let (lo, hi) = match problem.x_domain() {
        Some(d) => (d.lower().to_vec(), d.upper().to_vec()),
        None => (vec![-1.0; n0], vec![1.0; n0]),
    };
    LemmaGrid {
        lambdas: lemma_lambdas(),
        xs: (0..=10)
            .map(|i| {
                let s = i as f64 / 10.0;
                lo.iter().zip(&hi).map(|(a, b)| a + (b - a) * s).collect()
            })
            .collect(),
    }
}

/// Runs the enabled checks: bound lemmas and strong convexity on the grid,
/// then a fresh solve and the trace checks on it. Exit 0 iff all pass, 3
/// otherwise, 1 if the problem has no exact oracle.
pub fn verify(cfg: &RunConfig, registry: &Registry) -> Result<(i32, VerifyReport), CliError> {
    let resolved = registry.resolve(&cfg.problem, &cfg.constants)?;
    let entry = &resolved.entry;
    let oracle = resolved
        .oracle
        .as_ref()
        .ok_or_else(|| CliError::OracleUnavailable(entry.name.clone()))?;
    let checks_cfg = &cfg.checks;
    let mut report = VerifyReport {
        problem: entry.name.clone(),
        pass: true,
        checks: Vec::new(),
        gap_decay_slope: None,
        solve_status: None,
        first_hit: None,
        horizon: None,
    };

    if let Some(why) = &resolved.invalid_constants {
        report.checks.push(CheckLine {
            name: format!("declared_constants ({why})"),
            metric: "valid".into(),
            value: None,
            evaluated: 1,
            pass: false,
        });
    }
    if checks_cfg.lemmas {
        let lemmas = verify_lemma_bounds(oracle, &lemma_grid(&entry.problem))?;
        report.checks.extend(lemmas.checks.iter().map(CheckLine::from));
        report.gap_decay_slope = lemmas.gap_decay_slope;
    }
    if checks_cfg.strong_convexity {
        let t = oracle.lambda_threshold();
        let lambdas: Vec<f64> = (0..=10).map(|p| t * 2f64.powi(p)).collect();
        report
            .checks
            .push(CheckLine::from(&check_lagrangian_strong_convexity(oracle, &lambdas)));
    }

    let wants_trace = checks_cfg.descent
        || checks_cfg.error_decomposition
        || checks_cfg.leader_step
        || checks_cfg.inner_triangle
        || checks_cfg.horizon;
    if wants_trace && resolved.invalid_constants.is_none() {
        let (outcome, _) = solve_resolved(cfg, &resolved)?;
        report.solve_status = Some(status_name(outcome.status).into());
        if let Some(path) = &cfg.output.trace {
            trace_of(&entry.name, entry.problem.k(), cfg, &outcome).write(path)?;
        }
        let p = &entry.problem;
        let o: &dyn GroundTruth<f64> = oracle;
        let mut trace_checks = Vec::new();
        if checks_cfg.descent {
            trace_checks.extend(descent_check(&outcome, outcome.eta, Some(o))?);
        }
        if checks_cfg.error_decomposition {
            trace_checks.extend(error_decomposition_check(&outcome, p, Some(o))?);
        }
        if checks_cfg.leader_step {
            trace_checks.push(leader_step_check(&outcome, p.constants(), p.k()));
        }
        if checks_cfg.inner_triangle {
            trace_checks.push(inner_triangle_check(&outcome, p.constants(), Some(o))?);
        }
        report.checks.extend(trace_checks.iter().map(CheckLine::from));
        if checks_cfg.horizon {
            let h = horizon_check(&outcome, p.constants(), cfg.schedule.target_eps, Some(o))?;
            let hit = h.first_hit.unwrap_or(outcome.trace.len()) as f64;
            report.checks.push(CheckLine {
                name: "horizon".into(),
                metric: "hit_over_horizon".into(),
                value: finite(hit / h.horizon),
                evaluated: outcome.trace.len(),
                pass: h.pass,
            });
            report.first_hit = h.first_hit;
            report.horizon = finite(h.horizon);
        }
    }

    report.pass = report.checks.iter().all(|c| c.pass);
    if let Some(path) = &cfg.output.report {
        write_json(path, &report)?;
    }
    Ok((if report.pass { EXIT_OK } else { EXIT_VERIFY }, report))
}

// ---------------------------------------------------------------------------
// gradcheck

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradLine {
    pub oracle: String,
    /// Largest `‖fd − g‖ / max(1, ‖g‖)` over the samples.
    pub worst_rel_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub problem: String,
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub pass: bool,
    pub oracles: Vec<GradLine>,
}

fn rel_err(fd: &[f64], exact: &[f64]) -> f64 {
    let diff: f64 = fd.iter().zip(exact).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let scale = exact.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let e = diff / scale;
    if e.is_nan() {
        f64::INFINITY
    } else {
        e
    }
}

fn sample_box(lo: Option<&[f64]>, hi: Option<&[f64]>, dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dim)
        .map(|j| match (lo, hi) {
            (Some(l), Some(h)) => rng.gen_range(l[j]..=h[j]),
            _ => rng.gen_range(-2.0..=2.0),
        })
        .collect()
}

struct Worst(Vec<(String, f64)>);

impl Worst {
    fn record(&mut self, name: String, err: f64) {
        match self.0.iter_mut().find(|(n, _)| *n == name) {
            Some((_, w)) => *w = w.max(err),
            None => self.0.push((name, err)),
        }
    }
}

/// Compares every analytic gradient of `problem` (and of the penalty surrogate,
/// and `∇F` when `oracle` is given) against central finite differences at
/// `samples` random points.
pub fn gradcheck_problem(
    problem: &Problem,
    oracle: Option<&QuadraticOracle>,
    samples: usize,
    seed: u64,
) -> Result<Vec<GradLine>, CliError> {
    let h = default_fd_step::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n0 = problem.layout().n0();
    let xd = problem.x_domain();
    let yd = problem.y_domain();
    let mut worst = Worst(Vec::new());
    for _ in 0..samples {
        let x = sample_box(xd.map(|d| d.lower()), xd.map(|d| d.upper()), n0, &mut rng);
        let n = problem.layout().total();
        let y = sample_box(yd.map(|d| d.lower()), yd.map(|d| d.upper()), n, &mut rng);
        let z = sample_box(yd.map(|d| d.lower()), yd.map(|d| d.upper()), n, &mut rng);
        let lambda = rng.gen_range(1.0..50.0);
        let w: Vec<f64> = x.iter().chain(&y).copied().collect();

        let leader = problem.leader();
        let fd = finite_difference_grad(|w: &[f64]| leader.value(&w[..n0], &w[n0..]), &w, h)?;
        worst.record("leader.grad_x".into(), rel_err(&fd[..n0], &leader.grad_x(&x, &y)));
        worst.record("leader.grad_y".into(), rel_err(&fd[n0..], &leader.grad_y(&x, &y)));
        for i in 0..problem.k() {
            let g = problem.follower(i);
            let fd = finite_difference_grad(|w: &[f64]| g.value(&w[..n0], &w[n0..]), &w, h)?;
            let own: Vec<f64> = problem.layout().block(i).map(|j| fd[n0 + j]).collect();
            worst.record(format!("follower[{i}].grad_x"), rel_err(&fd[..n0], &g.grad_x(&x, &y)));
            worst.record(format!("follower[{i}].grad_own"), rel_err(&own, &g.grad_own(&x, &y)));
        }

        let fd = finite_difference_grad(
            |x: &[f64]| surrogate_value(problem, lambda, x, &y, &z).unwrap_or(f64::NAN),
            &x,
            h,
        )?;
        worst.record(
            "surrogate.grad_x".into(),
            rel_err(&fd, &surrogate_grad_x(problem, lambda, &x, &y, &z)?),
        );
        let fd = finite_difference_grad(
            |y: &[f64]| surrogate_value(problem, lambda, &x, y, &z).unwrap_or(f64::NAN),
            &y,
            h,
        )?;
        worst.record(
            "surrogate.grad_y".into(),
            rel_err(&fd, &surrogate_grad_y(problem, lambda, &x, &y, &z)?),
        );

        if let Some(o) = oracle {
            let fd = finite_difference_grad(|x: &[f64]| o.implicit_value(x).unwrap_or(f64::NAN), &x, h)?;
            worst.record("oracle.true_gradient".into(), rel_err(&fd, &o.exact_true_gradient(&x)?));
        }
    }
    Ok(worst
        .0
        .into_iter()
        .map(|(oracle, e)| GradLine {
            oracle,
            worst_rel_error: e,
            pass: e <= GRADCHECK_TOLERANCE,
        })
        .collect())
}

/// Exit 0 when every oracle agrees with finite differences, 3 otherwise.
pub fn gradcheck(cfg: &RunConfig, registry: &Registry) -> Result<(i32, GradcheckReport), CliError> {
    let resolved = registry.resolve(&cfg.problem, &cfg.constants)?;
    let samples = cfg.checks.gradcheck_samples;
    if samples == 0 {
        return Err(CliError::Config("`checks.gradcheck_samples` must be positive".into()));
    }
    let lines = gradcheck_problem(&resolved.entry.problem, resolved.oracle.as_ref(), samples, cfg.seed)?;
    let report = GradcheckReport {
        problem: resolved.entry.name.clone(),
        samples,
        seed: cfg.seed,
        tolerance: GRADCHECK_TOLERANCE,
        pass: lines.iter().all(|l| l.pass),
        oracles: lines,
    };
    if let Some(path) = &cfg.output.report {
        write_json(path, &report)?;
    }
    Ok((if report.pass { EXIT_OK } else { EXIT_VERIFY }, report))
}

// ---------------------------------------------------------------------------
// ratefit

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub file: Option<String>,
    pub problem: String,
    pub k: usize,
    pub points: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub alpha: f64,
    /// `−1/(6+α)`, the exponent of the worst-case bound.
    pub theoretical_exponent: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Least squares of `log min_{s≤t} ‖∇F(x_s)‖` against `log` cumulative
/// gradient evaluations. Passes when the slope is at most `−1/(6+α) + slack`.
pub fn fit_trace(trace: &Trace, slack: f64) -> Result<RateFit, CliError> {
    let mut best = f64::INFINITY;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in &trace.rows {
        let Some(g) = r.true_grad_norm else { continue };
        best = best.min(g);
        if r.grad_evals_cum > 0 && best > 0.0 && best.is_finite() {
            xs.push((r.grad_evals_cum as f64).ln());
            ys.push(best.ln());
        }
    }
    if xs.len() < MIN_RATE_POINTS {
        return Err(CliError::Trace(format!(
            "{} usable points with an exact gradient norm; need at least {MIN_RATE_POINTS}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(CliError::Trace("cumulative evaluations do not vary".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res <= f64::EPSILON {
        1.0
    } else {
        0.0
    };
    let alpha = trace.meta.alpha;
    let theoretical_exponent = -1.0 / (6.0 + alpha);
    Ok(RateFit {
        file: None,
        problem: trace.meta.problem.clone(),
        k: trace.meta.k,
        points: xs.len(),
        slope,
        intercept,
        r2,
        alpha,
        theoretical_exponent,
        slack,
        pass: slope <= theoretical_exponent + slack,
    })
}

/// Fits every file. Exit 1 if any file is unreadable or too short, else 0 when
/// all fits pass and 3 otherwise.
pub fn ratefit(paths: &[PathBuf], slack: f64) -> Result<(i32, Vec<RateFit>), CliError> {
    if paths.is_empty() {
        return Err(CliError::Config("ratefit needs at least one trace file".into()));
    }
    let mut fits = Vec::new();
    for p in paths {
        let trace = Trace::read(p)?;
        let mut fit = fit_trace(&trace, slack).map_err(|e| match e {
            CliError::Trace(m) => CliError::Trace(format!("{}: {m}", p.display())),
            other => other,
        })?;
        fit.file = Some(p.display().to_string());
        fits.push(fit);
    }
    let code = if fits.iter().all(|f| f.pass) {
        EXIT_OK
    } else {
        EXIT_VERIFY
    };
    Ok((code, fits))
}
