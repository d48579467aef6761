//! Game instances, gradient oracles, the stacked game operator and the
//! ε-stationarity certificate.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;
use crate::vector;

/// Block structure of the follower vector `y = (y_1, ..., y_k)` plus the
/// leader dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    n0: usize,
    dims: Vec<usize>,
    offsets: Vec<usize>,
}

impl BlockLayout {
    pub fn new(n0: usize, dims: Vec<usize>) -> Result<Self> {
        if n0 == 0 {
            return Err(Error::InvalidParameter("leader dimension must be positive".into()));
        }
        if dims.is_empty() {
            return Err(Error::InvalidParameter("at least one follower is required".into()));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidParameter("follower dimensions must be positive".into()));
        }
        let mut offsets = Vec::with_capacity(dims.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for &d in &dims {
            acc += d;
            offsets.push(acc);
        }
        Ok(Self { n0, dims, offsets })
    }

    /// `k` scalar-strategy followers and a scalar leader.
    pub fn scalar(k: usize) -> Result<Self> {
        Self::new(1, vec![1; k])
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn k(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total follower dimension `N = Σ n_i`.
    pub fn total(&self) -> usize {
        self.offsets[self.dims.len()]
    }

    pub fn block(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }
}

/// Axis-aligned box `lower ≤ v ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain<T> {
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> BoxDomain<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        check_len("box bounds", lower.len(), upper.len())?;
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidParameter(
                "box lower bound must be strictly below upper bound".into(),
            ));
        }
        Ok(Self { lower, upper })
    }

    /// The box `[lo, hi]^dim`.
    pub fn uniform(dim: usize, lo: T, hi: T) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn project(&self, v: &mut [T]) {
        for ((vi, &l), &u) in v.iter_mut().zip(&self.lower).zip(&self.upper) {
            *vi = vi.max(l).min(u);
        }
    }

    pub fn contains(&self, v: &[T]) -> bool {
        v.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&vi, (&l, &u))| vi >= l && vi <= u)
    }

    pub fn diameter(&self) -> T {
        vector::dist(&self.lower, &self.upper)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<T> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| l + (u - l) * T::lit(rng.gen::<f64>()))
            .collect()
    }
}

/// Smoothness and monotonicity constants of a game instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessConstants<T> {
    /// Strong-monotonicity modulus of the followers' game operator.
    pub mu_g: T,
    /// Bound on the leader's gradient blocks over the domain.
    pub ell_f0: T,
    /// Joint smoothness of the leader objective.
    pub ell_f1: T,
    /// Bound on the followers' x-gradients over the domain.
    pub ell_g0: T,
    /// Joint smoothness of every follower cost.
    pub ell_g1: T,
    /// Lipschitz modulus of the follower Hessians.
    pub ell_g2: T,
}

impl<T: Scalar> SmoothnessConstants<T> {
    pub fn validate(&self) -> Result<()> {
        self.validate_signs()?;
        if self.ell_g1 < self.mu_g {
            return Err(Error::InvalidParameter(format!(
                "ell_g1 ({}) must be at least mu_g ({})",
                self.ell_g1, self.mu_g
            )));
        }
        Ok(())
    }

    /// Positivity and finiteness only, without the `ell_g1 ≥ mu_g` relation.
    pub fn validate_signs(&self) -> Result<()> {
        let positive = [
            ("mu_g", self.mu_g),
            ("ell_f0", self.ell_f0),
            ("ell_f1", self.ell_f1),
            ("ell_g0", self.ell_g0),
            ("ell_g1", self.ell_g1),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.ell_g2 >= T::zero()) {
            return Err(Error::InvalidParameter("ell_g2 must be non-negative".into()));
        }
        Ok(())
    }

    /// Smoothness constant of the implicit objective `F(x) = f(x, y*(x))`.
    pub fn hypergradient_smoothness(&self) -> T {
        let ratio = self.ell_g1 / self.mu_g;
        (self.ell_f1 + self.ell_f0 * self.ell_g2 / self.mu_g + self.ell_g1 * self.ell_f1 / self.mu_g)
            * (T::one() + ratio)
    }
}

/// Leader cost `f(x, y)`. Implementations must be pure.
pub trait LeaderObjective<T>: Send + Sync {
    fn value(&self, x: &[T], y: &[T]) -> T;
    fn grad_x(&self, x: &[T], y: &[T]) -> Vec<T>;
    /// Gradient with respect to the whole block vector `y`.
    fn grad_y(&self, x: &[T], y: &[T]) -> Vec<T>;
}

/// Cost `g_i(x, y)` of one follower. `y` is always the full block vector.
pub trait FollowerCost<T>: Send + Sync {
    fn value(&self, x: &[T], y: &[T]) -> T;
    fn grad_x(&self, x: &[T], y: &[T]) -> Vec<T>;
    /// Gradient in the follower's own block `y_i`.
    fn grad_own(&self, x: &[T], y: &[T]) -> Vec<T>;
}

/// A one-leader / k-follower game instance.
#[derive(Clone)]
pub struct StackelbergProblem<T> {
    name: String,
    leader: Arc<dyn LeaderObjective<T>>,
    followers: Vec<Arc<dyn FollowerCost<T>>>,
    layout: BlockLayout,
    x_domain: Option<BoxDomain<T>>,
    y_domain: Option<BoxDomain<T>>,
    constants: SmoothnessConstants<T>,
}

impl<T: Scalar> fmt::Debug for StackelbergProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StackelbergProblem")
            .field("name", &self.name)
            .field("layout", &self.layout)
            .field("x_domain", &self.x_domain)
            .field("y_domain", &self.y_domain)
            .field("constants", &self.constants)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> StackelbergProblem<T> {
    pub fn new(
        name: impl Into<String>,
        leader: Arc<dyn LeaderObjective<T>>,
        followers: Vec<Arc<dyn FollowerCost<T>>>,
        layout: BlockLayout,
        constants: SmoothnessConstants<T>,
    ) -> Result<Self> {
        check_len("follower count", layout.k(), followers.len())?;
        constants.validate()?;
        Ok(Self {
            name: name.into(),
            leader,
            followers,
            layout,
            x_domain: None,
            y_domain: None,
            constants,
        })
    }

    pub fn with_domains(mut self, x_domain: Option<BoxDomain<T>>, y_domain: Option<BoxDomain<T>>) -> Result<Self> {
        if let Some(d) = &x_domain {
            check_len("leader box", self.layout.n0(), d.dim())?;
        }
        if let Some(d) = &y_domain {
            check_len("follower box", self.layout.total(), d.dim())?;
        }
        self.x_domain = x_domain;
        self.y_domain = y_domain;
        Ok(self)
    }

    pub fn with_constants(mut self, constants: SmoothnessConstants<T>) -> Result<Self> {
        constants.validate()?;
        self.constants = constants;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn k(&self) -> usize {
        self.layout.k()
    }

    pub fn constants(&self) -> &SmoothnessConstants<T> {
        &self.constants
    }

    pub fn x_domain(&self) -> Option<&BoxDomain<T>> {
        self.x_domain.as_ref()
    }

    pub fn y_domain(&self) -> Option<&BoxDomain<T>> {
        self.y_domain.as_ref()
    }

    pub fn leader(&self) -> &dyn LeaderObjective<T> {
        self.leader.as_ref()
    }

    pub fn follower(&self, i: usize) -> &dyn FollowerCost<T> {
        self.followers[i].as_ref()
    }

    pub fn check_point(&self, x: &[T], y: &[T]) -> Result<()> {
        check_len("leader vector", self.layout.n0(), x.len())?;
        check_len("follower vector", self.layout.total(), y.len())
    }

    pub fn project_x(&self, x: &mut [T]) {
        if let Some(d) = &self.x_domain {
            d.project(x);
        }
    }

    pub fn project_y(&self, y: &mut [T]) {
        if let Some(d) = &self.y_domain {
            d.project(y);
        }
    }

    /// Projects only block `i` of `y` onto its slice of the follower box.
    pub fn project_block(&self, i: usize, y: &mut [T]) {
        if let Some(d) = &self.y_domain {
            let r = self.layout.block(i);
            for j in r {
                y[j] = y[j].max(d.lower[j]).min(d.upper[j]);
            }
        }
    }
}

/// A leader vector paired with a block follower vector.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPoint<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
}

impl<T: Scalar> JointPoint<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Self {
        Self { x, y }
    }

    pub fn validate(&self, layout: &BlockLayout) -> Result<()> {
        check_len("leader vector", layout.n0(), self.x.len())?;
        check_len("follower vector", layout.total(), self.y.len())?;
        if !vector::all_finite(&self.x) || !vector::all_finite(&self.y) {
            return Err(Error::NumericFailure {
                context: "joint point",
                iterate: vector::to_f64(&self.y),
            });
        }
        Ok(())
    }
}

/// Stacked own-block gradients `V(y) = (∇_{y_1} g_1, ..., ∇_{y_k} g_k)` at fixed `x`.
pub fn game_operator<T: Scalar>(problem: &StackelbergProblem<T>, x: &[T], y: &[T]) -> Result<Vec<T>> {
    problem.check_point(x, y)?;
    let layout = problem.layout();
    let mut out = Vec::with_capacity(layout.total());
    for i in 0..layout.k() {
        let g = problem.follower(i).grad_own(x, y);
        check_len("follower own gradient", layout.dims()[i], g.len())?;
        out.extend(g);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityReport<T> {
    /// Smallest observed `⟨V(y') − V(y), y' − y⟩ / ‖y' − y‖²`.
    pub min_ratio: T,
    pub pass: bool,
}

/// Samples pairs of follower profiles and measures the strong-monotonicity
/// ratio of the game operator. Unbounded problems need `radius`.
pub fn check_strong_monotonicity<T: Scalar>(
    problem: &StackelbergProblem<T>,
    sample_count: usize,
    rng_seed: u64,
    radius: Option<T>,
) -> Result<MonotonicityReport<T>> {
    if sample_count == 0 {
        return Err(Error::InvalidParameter("sample_count must be positive".into()));
    }
    let layout = problem.layout();
    let fallback = |dim: usize| -> Result<BoxDomain<T>> {
        let r = radius.ok_or_else(|| Error::InvalidParameter("unbounded domain requires a sampling radius".into()))?;
        BoxDomain::uniform(dim, -r, r)
    };
    let x_box = match problem.x_domain() {
        Some(d) => d.clone(),
        None => fallback(layout.n0())?,
    };
    let y_box = match problem.y_domain() {
        Some(d) => d.clone(),
        None => fallback(layout.total())?,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let tiny = T::epsilon().sqrt();
    let mut min_ratio = T::infinity();
    for _ in 0..sample_count {
        let x = x_box.sample(&mut rng);
        let y = y_box.sample(&mut rng);
        let mut y2 = y_box.sample(&mut rng);
        while vector::dist(&y, &y2) <= tiny {
            y2 = y_box.sample(&mut rng);
        }
        let v1 = game_operator(problem, &x, &y)?;
        let v2 = game_operator(problem, &x, &y2)?;
        let dy = vector::sub(&y2, &y);
        let dv = vector::sub(&v2, &v1);
        let ratio = vector::dot(&dv, &dy) / vector::norm_sq(&dy);
        min_ratio = min_ratio.min(ratio);
    }
    let mu = problem.constants().mu_g;
    // 1e-9 in f64; widened to a few ulps of mu_g in lower precision
    let slack = T::lit(1e-9).max(T::epsilon() * T::lit(64.0) * mu);
    let pass = min_ratio >= mu - slack;
    Ok(MonotonicityReport { min_ratio, pass })
}

/// Hard cap on the best-response descent used to measure follower gaps.
pub const SUBOPTIMALITY_MAX_ITERS: usize = 1_000_000;

/// Per-follower suboptimality `g_i(x, y) − min_{y_i'} g_i(x, y_i', y_{−i})`.
///
/// The inner minimum comes from projected gradient descent on block `i`
/// with step `1/ell_g1`, stopped once the gradient mapping is below
/// `inner_tol`.
pub fn follower_suboptimality<T: Scalar>(
    problem: &StackelbergProblem<T>,
    x: &[T],
    y: &[T],
    inner_tol: T,
) -> Result<Vec<T>> {
    problem.check_point(x, y)?;
    if !(inner_tol > T::zero()) {
        return Err(Error::InvalidParameter("inner_tol must be positive".into()));
    }
    let layout = problem.layout();
    let step = T::one() / problem.constants().ell_g1;
    let mut gaps = Vec::with_capacity(layout.k());
    for i in 0..layout.k() {
        let follower = problem.follower(i);
        let block = layout.block(i);
        let mut w = y.to_vec();
        let mut converged = false;
        for _ in 0..SUBOPTIMALITY_MAX_ITERS {
            let g = follower.grad_own(x, &w);
            if !vector::all_finite(&g) {
                return Err(Error::NumericFailure {
                    context: "follower best response",
                    iterate: vector::to_f64(&w),
                });
            }
            let mut next = w.clone();
            for (j, gj) in block.clone().zip(&g) {
                next[j] = w[j] - step * *gj;
            }
            problem.project_block(i, &mut next);
            let mapping = vector::dist(&next[block.clone()], &w[block.clone()]) / step;
            if mapping <= inner_tol {
                converged = true;
                break;
            }
            w = next;
        }
        if !converged {
            return Err(Error::BudgetExceeded {
                context: "follower best response",
                iterations: SUBOPTIMALITY_MAX_ITERS,
            });
        }
        gaps.push(follower.value(x, y) - follower.value(x, &w));
    }
    Ok(gaps)
}

/// Which leader gradient backs the stationarity test.
#[derive(Debug, Clone, Copy)]
pub enum LeaderGradient<'a, T> {
    /// The exact implicit gradient `∇F(x)`.
    True(&'a [T]),
    /// The penalty-surrogate x-gradient, used when no exact oracle exists.
    Surrogate(&'a [T]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientSource {
    True,
    Surrogate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityCertificate<T> {
    pub eps: T,
    pub follower_gaps: Vec<T>,
    pub max_gap: T,
    /// Norm of `∇F(x)`, or of the surrogate gradient when `source` says so.
    pub gradient_norm: T,
    pub source: GradientSource,
    pub stationary: bool,
}

/// Tests both conditions of an ε-stationary Stackelberg equilibrium at `(x, y)`:
/// every follower within `eps` of a best response, and the leader gradient
/// norm at most `eps`. The gradient condition is read as `‖∇F(x)‖ ≤ eps`.
pub fn check_epsilon_stationary<T: Scalar>(
    problem: &StackelbergProblem<T>,
    x: &[T],
    y: &[T],
    eps: T,
    gradient: LeaderGradient<'_, T>,
) -> Result<StationarityCertificate<T>> {
    if !(eps > T::zero()) {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let (grad, source) = match gradient {
        LeaderGradient::True(g) => (g, GradientSource::True),
        LeaderGradient::Surrogate(g) => (g, GradientSource::Surrogate),
    };
    check_len("leader gradient", problem.layout().n0(), grad.len())?;
    // gap underestimation is at most tol² / (2 mu_g) = 1e-6 · eps
    let inner_tol = (T::lit(2e-6) * problem.constants().mu_g * eps).sqrt();
    let follower_gaps = follower_suboptimality(problem, x, y, inner_tol)?;
    let max_gap = follower_gaps.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let gradient_norm = vector::norm(grad);
    let stationary = max_gap <= eps && gradient_norm <= eps;
    Ok(StationarityCertificate {
        eps,
        follower_gaps,
        max_gap,
        gradient_norm,
        source,
        stationary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_symmetric_quadratic, sq2};
    use approx::assert_abs_diff_eq;

    #[test]
    fn layout_blocks() {
        let l = BlockLayout::new(2, vec![1, 3, 2]).unwrap();
        assert_eq!(l.total(), 6);
        assert_eq!(l.block(1), 1..4);
        assert_eq!(l.k(), 3);
        assert!(BlockLayout::new(1, vec![]).is_err());
        assert!(BlockLayout::new(1, vec![1, 0]).is_err());
    }

    #[test]
    fn box_projection() {
        let b = BoxDomain::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        let mut v = vec![2.0, -3.0];
        b.project(&mut v);
        assert_eq!(v, vec![1.0, -1.0]);
        assert!(b.contains(&v));
        assert!(BoxDomain::new(vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn constants_validation() {
        let c = SmoothnessConstants {
            mu_g: 1.0,
            ell_f0: 1.0,
            ell_f1: 1.0,
            ell_g0: 1.0,
            ell_g1: 0.5,
            ell_g2: 0.0,
        };
        assert!(c.validate().is_err());
        let ok = SmoothnessConstants { ell_g1: 2.0, ..c };
        assert!(ok.validate().is_ok());
        assert!(SmoothnessConstants { ell_g2: -1.0, ..ok }.validate().is_err());
    }

    #[test]
    fn game_operator_sq2_examples() {
        let p = sq2::<f64>().problem;
        assert_eq!(game_operator(&p, &[0.0], &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(game_operator(&p, &[1.0], &[0.0, 0.0]).unwrap(), vec![-1.0, -1.0]);
        assert_eq!(game_operator(&p, &[0.5], &[0.5, 0.5]).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(game_operator(&p, &[0.5], &[0.5]), Err(Error::Shape { .. })));
    }

    #[test]
    fn game_operator_in_f32() {
        let p = sq2::<f32>().problem;
        assert_eq!(game_operator(&p, &[1.0], &[0.0, 0.0]).unwrap(), vec![-1.0_f32, -1.0]);
    }

    #[test]
    fn monotonicity_sq2() {
        let p = sq2::<f64>().problem;
        let r = check_strong_monotonicity(&p, 100, 7, None).unwrap();
        assert_abs_diff_eq!(r.min_ratio, 1.0, epsilon = 1e-12);
        assert!(r.pass);

        let inflated = SmoothnessConstants {
            mu_g: 2.0,
            ..*p.constants()
        };
        let p2 = p.clone().with_constants(inflated).unwrap();
        assert!(!check_strong_monotonicity(&p2, 100, 7, None).unwrap().pass);
    }

    #[test]
    fn monotonicity_single_follower() {
        // k = 1, g = ½ y² (coupling is irrelevant for a single follower)
        let entry = make_symmetric_quadratic::<f64>(1, 0.0, &[0.0]).unwrap();
        let r = check_strong_monotonicity(&entry.problem, 50, 1, None).unwrap();
        assert_abs_diff_eq!(r.min_ratio, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn monotonicity_requires_radius_when_unbounded() {
        let p = sq2::<f64>().problem.with_domains(None, None).unwrap();
        assert!(check_strong_monotonicity(&p, 5, 0, None).is_err());
        assert!(check_strong_monotonicity(&p, 5, 0, Some(3.0)).unwrap().pass);
        assert!(check_strong_monotonicity(&p, 0, 0, Some(3.0)).is_err());
    }

    #[test]
    fn suboptimality_examples() {
        let p = sq2::<f64>().problem;
        let gaps = follower_suboptimality(&p, &[1.0], &[1.0, 1.0], 1e-10).unwrap();
        assert_eq!(gaps, vec![0.0, 0.0]);
        let gaps = follower_suboptimality(&p, &[1.0], &[0.5, 0.5], 1e-10).unwrap();
        assert_abs_diff_eq!(gaps[0], 0.125, epsilon = 1e-12);
        assert_abs_diff_eq!(gaps[1], 0.125, epsilon = 1e-12);
        let gaps = follower_suboptimality(&p, &[0.0], &[0.3, 0.0], 1e-10).unwrap();
        assert_abs_diff_eq!(gaps[0], 0.045, epsilon = 1e-12);
        assert_abs_diff_eq!(gaps[1], 0.0, epsilon = 1e-12);
        assert!(follower_suboptimality(&p, &[0.0], &[0.3, 0.0], 0.0).is_err());
    }

    #[test]
    fn stationarity_examples() {
        let p = sq2::<f64>().problem;
        let c = check_epsilon_stationary(&p, &[0.0], &[0.0, 0.0], 1e-6, LeaderGradient::True(&[0.0])).unwrap();
        assert!(c.stationary);
        assert_eq!(c.source, GradientSource::True);

        let c = check_epsilon_stationary(&p, &[1.0], &[1.0, 1.0], 0.1, LeaderGradient::True(&[3.0])).unwrap();
        assert!(!c.stationary);
        assert_eq!(c.gradient_norm, 3.0);
        assert_eq!(c.max_gap, 0.0);

        let c = check_epsilon_stationary(&p, &[0.02], &[0.02, 0.02], 0.1, LeaderGradient::True(&[0.06])).unwrap();
        assert!(c.stationary);
        assert_abs_diff_eq!(c.gradient_norm, 0.06, epsilon = 1e-15);

        let c = check_epsilon_stationary(&p, &[0.0], &[0.0, 0.0], 0.1, LeaderGradient::Surrogate(&[0.0])).unwrap();
        assert_eq!(c.source, GradientSource::Surrogate);
        assert!(check_epsilon_stationary(&p, &[0.0], &[0.0, 0.0], 0.0, LeaderGradient::True(&[0.0])).is_err());
    }
}
