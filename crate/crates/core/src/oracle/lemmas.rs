//! Grid checks of the penalty-method error bounds against exact quantities.

use std::collections::HashMap;

use nalgebra::DVector;

use super::{linalg, QuadraticOracle};
use crate::bounds;
use crate::error::{Error, Result};
use crate::vector;

/// A check passes when every left side is within this relative slack of its right side.
pub const RATIO_TOLERANCE: f64 = 1e-9;

/// Evaluation grid: multipliers below the declared threshold are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaGrid {
    pub lambdas: Vec<f64>,
    pub xs: Vec<Vec<f64>>,
}

impl LemmaGrid {
    /// `λ ∈ {2, 4, ..., 2^10}` and 11 evenly spaced scalar points in `[lo, hi]`.
    pub fn scalar(lo: f64, hi: f64) -> Self {
        Self {
            lambdas: (1..=10).map(|p| 2f64.powi(p)).collect(),
            xs: (0..=10).map(|i| vec![lo + (hi - lo) * i as f64 / 10.0]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaCheck {
    pub name: &'static str,
    /// Largest left/right ratio over the grid.
    pub max_ratio: f64,
    /// Number of inequalities evaluated.
    pub evaluated: usize,
    pub pass: bool,
}

impl LemmaCheck {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            max_ratio: 0.0,
            evaluated: 0,
            pass: true,
        }
    }

    fn record(&mut self, lhs: f64, rhs: f64) {
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs <= 1e-14 {
            0.0
        } else {
            f64::INFINITY
        };
        // a NaN side counts as an unbounded violation
        let ratio = if ratio.is_nan() { f64::INFINITY } else { ratio };
        self.max_ratio = self.max_ratio.max(ratio);
        self.evaluated += 1;
        self.pass = self.max_ratio <= 1.0 + RATIO_TOLERANCE;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub checks: Vec<LemmaCheck>,
    /// Worst (largest) log-log slope of `‖∇F(x) − ∇ℒ*_λ(x)‖` against `λ`
    /// across grid points with a nonzero gap.
    pub gap_decay_slope: Option<f64>,
}

impl LemmaReport {
    pub fn get(&self, name: &str) -> Option<&LemmaCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Least-squares slope of `ys` against `xs`.
pub(crate) fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn block_dists(oracle: &QuadraticOracle, a: &[f64], b: &[f64]) -> Vec<f64> {
    (0..oracle.k())
        .map(|i| {
            let r = oracle.spec().layout().block(i);
            vector::dist(&a[r.clone()], &b[r])
        })
        .collect()
}

/// Evaluates, on every grid point, the minimizer-gap, hypergradient-gap,
/// three-term and minimizer-sensitivity bounds with the oracle's declared
/// constants.
pub fn verify_lemma_bounds(oracle: &QuadraticOracle, grid: &LemmaGrid) -> Result<LemmaReport> {
    if grid.xs.is_empty() || grid.lambdas.is_empty() {
        return Err(Error::InvalidParameter("lemma grid must be nonempty".into()));
    }
    let c = oracle.constants();
    let k = oracle.k();
    let threshold = oracle.lambda_threshold();
    let mut lambdas: Vec<f64> = grid.lambdas.iter().copied().filter(|&l| l >= threshold).collect();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();

    let mut minimizer_gap = LemmaCheck::new("minimizer_gap");
    let mut hypergradient_gap = LemmaCheck::new("hypergradient_gap");
    let mut three_term = LemmaCheck::new("three_term_gradient_bound");
    let mut sensitivity = LemmaCheck::new("minimizer_sensitivity");

    let jacobian = oracle.exact_implicit_jacobian().clone();
    let mut minimizers: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    let mut worst_slope: Option<f64> = None;

    for (xi, x) in grid.xs.iter().enumerate() {
        let ystar = oracle.exact_followers_equilibrium(x)?;
        let true_grad = oracle.exact_true_gradient(x)?;
        let mut log_l = Vec::new();
        let mut log_gap = Vec::new();
        for (li, &lambda) in lambdas.iter().enumerate() {
            let ylam = oracle.exact_lagrangian_minimizer(lambda, x)?;
            let dists = block_dists(oracle, &ylam, &ystar);
            let bound = bounds::minimizer_gap_bound(c, lambda);
            for &d in &dists {
                minimizer_gap.record(d, bound);
            }

            let grad_x = oracle.lagrangian_grad_x(lambda, x, &ylam)?;
            let gap = vector::dist(&true_grad, &grad_x);
            hypergradient_gap.record(gap, bounds::hypergradient_gap_bound(c, k, lambda));
            if gap > 0.0 {
                log_l.push(lambda.ln());
                log_gap.push(gap.ln());
            }

            let grad_y = DVector::from_vec(oracle.lagrangian_grad_y(lambda, x, &ylam)?);
            let chained = jacobian.transpose() * grad_y;
            let residual: Vec<f64> = (0..x.len()).map(|j| true_grad[j] - grad_x[j] - chained[j]).collect();
            three_term.record(vector::norm(&residual), bounds::three_term_bound(c, lambda, &dists));

            minimizers.insert((xi, li), ylam);
        }
        if log_l.len() >= 2 && log_l.len() == lambdas.len() {
            let s = ls_slope(&log_l, &log_gap);
            worst_slope = Some(worst_slope.map_or(s, |w: f64| w.max(s)));
        }
    }

    for (x1i, x1) in grid.xs.iter().enumerate() {
        for (x2i, x2) in grid.xs.iter().enumerate() {
            let dx = vector::dist(x1, x2);
            for (l1i, &l1) in lambdas.iter().enumerate() {
                for (l2i, &l2) in lambdas.iter().enumerate().skip(l1i) {
                    let bound = bounds::minimizer_sensitivity_bound(c, dx, l1, l2);
                    let d = block_dists(oracle, &minimizers[&(x1i, l1i)], &minimizers[&(x2i, l2i)]);
                    for di in d {
                        sensitivity.record(di, bound);
                    }
                }
            }
        }
    }

    Ok(LemmaReport {
        checks: vec![minimizer_gap, hypergradient_gap, three_term, sensitivity],
        gap_decay_slope: worst_slope,
    })
}

/// Checks that `∇²_yy ℒ_λ` has symmetric-part spectrum at least `μ_g λ / 2`
/// for every multiplier at or above the threshold.
pub fn check_lagrangian_strong_convexity(oracle: &QuadraticOracle, lambdas: &[f64]) -> LemmaCheck {
    let mut check = LemmaCheck::new("lagrangian_strong_convexity");
    let threshold = oracle.lambda_threshold();
    for &lambda in lambdas.iter().filter(|&&l| l >= threshold) {
        let attained = linalg::min_sym_eigenvalue(&oracle.lagrangian_hessian_yy(lambda));
        let required = oracle.constants().mu_g * lambda / 2.0;
        if attained > 0.0 {
            check.record(required, attained);
        } else {
            check.record(f64::INFINITY, 1.0);
        }
    }
    check
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let xs: Vec<f64> = (1..6).map(|i| (i as f64).ln()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 1.5 * x).collect();
        assert!((ls_slope(&xs, &ys) + 1.5).abs() < 1e-12);
    }

    #[test]
    fn record_handles_degenerate_sides() {
        let mut c = LemmaCheck::new("t");
        c.record(0.0, 0.0);
        assert!(c.pass);
        assert_eq!(c.max_ratio, 0.0);
        c.record(1.0, 0.0);
        assert!(!c.pass);
        let mut c = LemmaCheck::new("t");
        c.record(f64::NAN, 1.0);
        assert!(!c.pass);
    }

    #[test]
    fn scalar_grid_shape() {
        let g = LemmaGrid::scalar(-1.0, 1.0);
        assert_eq!(g.lambdas.len(), 10);
        assert_eq!(g.lambdas[9], 1024.0);
        assert_eq!(g.xs.len(), 11);
        assert_eq!(g.xs[5], vec![0.0]);
    }
}
