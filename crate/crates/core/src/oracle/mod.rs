//! Exact ground truth for affine-quadratic games.
//!
//! This is the only module that factorizes matrices. The solver path never
//! calls into it; see [`factorization_count`].

mod lemmas;
mod linalg;
mod spec;

use nalgebra::{DMatrix, DVector};

pub use lemmas::{
    check_lagrangian_strong_convexity, verify_lemma_bounds, LemmaCheck, LemmaGrid, LemmaReport, RATIO_TOLERANCE,
};
pub use linalg::factorization_count;
pub use spec::{QuadraticForm, QuadraticGameSpec};

use crate::bounds;
use crate::error::{check_len, Error, Result};
use crate::model::{JointPoint, SmoothnessConstants};
use crate::scalar::Scalar;
use crate::vector;

/// Exact quantities the outer loop and its checks can ask for.
pub trait GroundTruth<T>: Send + Sync {
    /// `y*(x)`, the followers' Nash equilibrium.
    fn followers_equilibrium(&self, x: &[T]) -> Result<Vec<T>>;
    /// `F(x) = f(x, y*(x))`.
    fn implicit_value(&self, x: &[T]) -> Result<T>;
    /// `∇F(x)`.
    fn true_gradient(&self, x: &[T]) -> Result<Vec<T>>;
    /// `y*_λ(x)`, the minimizer of the exact penalized Lagrangian.
    fn lagrangian_minimizer(&self, lambda: T, x: &[T]) -> Result<Vec<T>>;
    /// `min_x F(x)`.
    fn optimal_value(&self) -> Result<T>;
}

/// Dense direct-solve oracle for a [`QuadraticGameSpec`].
#[derive(Debug, Clone)]
pub struct QuadraticOracle {
    spec: QuadraticGameSpec,
    constants: SmoothnessConstants<f64>,
    /// `∇_x y*(x) = −H_y⁻¹ H_x`, constant for this family.
    jacobian: DMatrix<f64>,
    /// `y*(0) = −H_y⁻¹ b`.
    anchor: DVector<f64>,
}

impl QuadraticOracle {
    pub fn new(spec: QuadraticGameSpec, constants: SmoothnessConstants<f64>) -> Result<Self> {
        constants.validate()?;
        let h_y = spec.h_y();
        let jacobian = -linalg::solve_matrix(&h_y, &spec.h_x())?;
        let anchor = -linalg::solve(&h_y, &spec.offset())?;
        Ok(Self {
            spec,
            constants,
            jacobian,
            anchor,
        })
    }

    pub fn spec(&self) -> &QuadraticGameSpec {
        &self.spec
    }

    pub fn constants(&self) -> &SmoothnessConstants<f64> {
        &self.constants
    }

    /// Same oracle with different declared constants. Only the bound checks and
    /// the multiplier threshold read them, so deliberately misdeclared values
    /// (say `mu_g > ell_g1`) are accepted as long as they are positive.
    pub fn with_constants(mut self, constants: SmoothnessConstants<f64>) -> Result<Self> {
        constants.validate_signs()?;
        self.constants = constants;
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.spec.layout().k()
    }

    fn check_x(&self, x: &[f64]) -> Result<DVector<f64>> {
        check_len("leader vector", self.spec.n0(), x.len())?;
        Ok(DVector::from_column_slice(x))
    }

    fn check_y(&self, y: &[f64]) -> Result<DVector<f64>> {
        check_len("follower vector", self.spec.n(), y.len())?;
        Ok(DVector::from_column_slice(y))
    }

    /// `∇_x y*(x) = −H_y⁻¹ H_x`.
    pub fn exact_implicit_jacobian(&self) -> &DMatrix<f64> {
        &self.jacobian
    }

    /// Solves `H_y y = −(H_x x + b)`.
    pub fn exact_followers_equilibrium(&self, x: &[f64]) -> Result<Vec<f64>> {
        let xv = self.check_x(x)?;
        Ok((&self.jacobian * xv + &self.anchor).as_slice().to_vec())
    }

    fn ystar(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.jacobian * x + &self.anchor
    }

    /// `F(x) = f(x, y*(x))`.
    pub fn implicit_value(&self, x: &[f64]) -> Result<f64> {
        let xv = self.check_x(x)?;
        let w = self.spec.joint(x, self.ystar(&xv).as_slice());
        Ok(self.spec.leader().value(&w))
    }

    /// `∇F(x) = ∇_x f + Jᵀ ∇_y f` at `(x, y*(x))`.
    pub fn exact_true_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let xv = self.check_x(x)?;
        let w = self.spec.joint(x, self.ystar(&xv).as_slice());
        let grad = self.spec.leader().gradient(&w);
        Ok(self.chain(&grad, None).as_slice().to_vec())
    }

    /// Unconstrained minimizer of `F` paired with its equilibrium response.
    pub fn exact_stackelberg_point(&self) -> Result<JointPoint<f64>> {
        let (n0, n) = (self.spec.n0(), self.spec.n());
        // w(x) = S x + s0 with S = [I; J], s0 = [0; y*(0)]
        let mut s = DMatrix::zeros(n0 + n, n0);
        s.view_mut((0, 0), (n0, n0)).fill_with_identity();
        s.view_mut((n0, 0), (n, n0)).copy_from(&self.jacobian);
        let mut s0 = DVector::zeros(n0 + n);
        s0.rows_mut(n0, n).copy_from(&self.anchor);
        let q = &self.spec.leader().hessian;
        let reduced = s.transpose() * q * &s;
        let curvature = linalg::min_sym_eigenvalue(&reduced);
        if !(curvature > 1e-12 * (1.0 + linalg::spectral_norm(&reduced))) {
            return Err(Error::NoEquilibrium(format!(
                "reduced leader quadratic has minimum eigenvalue {curvature}"
            )));
        }
        let rhs = -(s.transpose() * (q * &s0 + &self.spec.leader().linear));
        let x = linalg::solve(&reduced, &rhs)?;
        let y = self.ystar(&x);
        Ok(JointPoint::new(x.as_slice().to_vec(), y.as_slice().to_vec()))
    }

    /// Multiplier threshold from the declared constants.
    pub fn lambda_threshold(&self) -> f64 {
        bounds::lambda_threshold(&self.constants)
    }

    fn check_lambda(&self, lambda: f64) -> Result<()> {
        let threshold = self.lambda_threshold();
        if !(lambda >= threshold) || !lambda.is_finite() {
            return Err(Error::ConvexityViolation { lambda, threshold });
        }
        Ok(())
    }

    /// `∇²_yy ℒ_λ = Q_yy + λ diag(A_11, ..., A_kk)`.
    pub fn lagrangian_hessian_yy(&self, lambda: f64) -> DMatrix<f64> {
        let (n0, n) = (self.spec.n0(), self.spec.n());
        let q_yy = self.spec.leader().hessian.view((n0, n0), (n, n)).clone_owned();
        q_yy + self.spec.own_curvature() * lambda
    }

    /// `argmin_y ℒ_λ(x, y)`. Linear in this family because
    /// `∇_{y_i} g_i(x, y_i, y*_{−i}) = A_ii (y_i − y*_i)`.
    pub fn exact_lagrangian_minimizer(&self, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
        self.check_lambda(lambda)?;
        let xv = self.check_x(x)?;
        let (n0, n) = (self.spec.n0(), self.spec.n());
        let leader = self.spec.leader();
        let q_yx = leader.hessian.view((n0, 0), (n, n0));
        let q_y = leader.linear.rows(n0, n);
        let d = self.spec.own_curvature();
        let rhs = &d * self.ystar(&xv) * lambda - q_yx * &xv - q_y;
        let y = linalg::solve(&self.lagrangian_hessian_yy(lambda), &rhs)?;
        Ok(y.as_slice().to_vec())
    }

    /// Follower profile with block `i` taken from `y` and the rest from `ystar`.
    fn mixed(&self, i: usize, y: &DVector<f64>, ystar: &DVector<f64>) -> DVector<f64> {
        let mut m = ystar.clone();
        let b = self.spec.layout().block(i);
        m.rows_mut(b.start, b.len()).copy_from(&y.rows(b.start, b.len()));
        m
    }

    /// `∇_x part + Σ_{j ≠ skip} J_jᵀ (∇_{y_j} part)` for a joint gradient.
    fn chain(&self, grad: &DVector<f64>, skip: Option<usize>) -> DVector<f64> {
        let (n0, n) = (self.spec.n0(), self.spec.n());
        let mut gy = grad.rows(n0, n).clone_owned();
        if let Some(i) = skip {
            let b = self.spec.layout().block(i);
            gy.rows_mut(b.start, b.len()).fill(0.0);
        }
        grad.rows(0, n0) + self.jacobian.transpose() * gy
    }

    /// `ℒ_λ(x, y) = f(x, y) + λ Σ_i (g_i(x, y_i, y*_{−i}(x)) − g_i(x, y*(x)))`.
    pub fn lagrangian_value(&self, lambda: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        let xv = self.check_x(x)?;
        let yv = self.check_y(y)?;
        let ys = self.ystar(&xv);
        let mut penalty = 0.0;
        for i in 0..self.k() {
            let g = self.spec.follower(i);
            let m = self.mixed(i, &yv, &ys);
            penalty += g.value(&self.spec.joint(x, m.as_slice())) - g.value(&self.spec.joint(x, ys.as_slice()));
        }
        Ok(self.spec.leader().value(&self.spec.joint(x, y)) + lambda * penalty)
    }

    /// `∇_y ℒ_λ(x, y)`, block `i` being `∇_{y_i} f + λ ∇_{y_i} g_i(x, y_i, y*_{−i})`.
    pub fn lagrangian_grad_y(&self, lambda: f64, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let xv = self.check_x(x)?;
        let yv = self.check_y(y)?;
        let ys = self.ystar(&xv);
        let n0 = self.spec.n0();
        let mut out = self
            .spec
            .leader()
            .gradient(&self.spec.joint(x, y))
            .rows(n0, self.spec.n())
            .clone_owned();
        for i in 0..self.k() {
            let m = self.mixed(i, &yv, &ys);
            let grad = self.spec.follower(i).gradient(&self.spec.joint(x, m.as_slice()));
            let b = self.spec.layout().block(i);
            for r in b {
                out[r] += lambda * grad[n0 + r];
            }
        }
        Ok(out.as_slice().to_vec())
    }

    /// Total x-derivative of `ℒ_λ(x, y)` at fixed `y`, including the
    /// dependence of `y*(x)` on `x`.
    pub fn lagrangian_grad_x(&self, lambda: f64, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let xv = self.check_x(x)?;
        let yv = self.check_y(y)?;
        let ys = self.ystar(&xv);
        let n0 = self.spec.n0();
        let at_star = self.spec.joint(x, ys.as_slice());
        let mut out = self
            .spec
            .leader()
            .gradient(&self.spec.joint(x, y))
            .rows(0, n0)
            .clone_owned();
        for i in 0..self.k() {
            let g = self.spec.follower(i);
            let m = self.mixed(i, &yv, &ys);
            let mixed_grad = g.gradient(&self.spec.joint(x, m.as_slice()));
            let star_grad = g.gradient(&at_star);
            out += (self.chain(&mixed_grad, Some(i)) - self.chain(&star_grad, None)) * lambda;
        }
        Ok(out.as_slice().to_vec())
    }

    /// `∇ℒ*_λ(x)`, the gradient of `x ↦ min_y ℒ_λ(x, y)`.
    pub fn penalty_gradient(&self, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
        let y = self.exact_lagrangian_minimizer(lambda, x)?;
        self.lagrangian_grad_x(lambda, x, &y)
    }
}

impl<T: Scalar> GroundTruth<T> for QuadraticOracle {
    fn followers_equilibrium(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(vector::from_f64(&self.exact_followers_equilibrium(&vector::to_f64(x))?))
    }

    fn implicit_value(&self, x: &[T]) -> Result<T> {
        Ok(T::lit(QuadraticOracle::implicit_value(self, &vector::to_f64(x))?))
    }

    fn true_gradient(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(vector::from_f64(&self.exact_true_gradient(&vector::to_f64(x))?))
    }

    fn lagrangian_minimizer(&self, lambda: T, x: &[T]) -> Result<Vec<T>> {
        Ok(vector::from_f64(
            &self.exact_lagrangian_minimizer(lambda.as_f64(), &vector::to_f64(x))?,
        ))
    }

    fn optimal_value(&self) -> Result<T> {
        let p = self.exact_stackelberg_point()?;
        Ok(T::lit(QuadraticOracle::implicit_value(self, &p.x)?))
    }
}

/// Default central-difference step, `(machine epsilon)^{1/3}`.
pub fn default_fd_step<T: Scalar>() -> T {
    T::epsilon().cbrt()
}

/// Central differences with per-coordinate step `h · max(1, |x_j|)`.
pub fn finite_difference_grad<T: Scalar>(f: impl Fn(&[T]) -> T, point: &[T], h: T) -> Result<Vec<T>> {
    if !(h > T::zero()) {
        return Err(Error::InvalidParameter(
            "finite-difference step must be positive".into(),
        ));
    }
    let mut w = point.to_vec();
    let mut grad = Vec::with_capacity(point.len());
    for j in 0..point.len() {
        let step = h * T::one().max(point[j].abs());
        w[j] = point[j] + step;
        let up = f(&w);
        w[j] = point[j] - step;
        let down = f(&w);
        w[j] = point[j];
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NumericFailure {
                context: "finite difference",
                iterate: vector::to_f64(point),
            });
        }
        grad.push((up - down) / (T::lit(2.0) * step));
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BlockLayout;
    use approx::assert_abs_diff_eq;

    fn unit_constants() -> SmoothnessConstants<f64> {
        SmoothnessConstants {
            mu_g: 1.0,
            ell_f0: 1.0,
            ell_f1: 1.0,
            ell_g0: 1.0,
            ell_g1: 2.0,
            ell_g2: 0.0,
        }
    }

    /// f = ½(x − s)² + ½‖y‖², g_i = ½(y_i − x)², built from raw matrices.
    fn sq2_oracle(shift: f64) -> QuadraticOracle {
        let layout = BlockLayout::scalar(2).unwrap();
        let leader = QuadraticForm::new(
            DMatrix::identity(3, 3),
            DVector::from_vec(vec![-shift, 0.0, 0.0]),
            0.5 * shift * shift,
        )
        .unwrap();
        let follower = |i: usize| {
            let mut h = DMatrix::zeros(3, 3);
            h[(0, 0)] = 1.0;
            h[(i + 1, i + 1)] = 1.0;
            h[(0, i + 1)] = -1.0;
            h[(i + 1, 0)] = -1.0;
            QuadraticForm::new(h, DVector::zeros(3), 0.0).unwrap()
        };
        let spec = QuadraticGameSpec::new(layout, leader, vec![follower(0), follower(1)]).unwrap();
        QuadraticOracle::new(spec, unit_constants()).unwrap()
    }

    /// Scalar blocks with `A = [[2,1],[1,2]]`, `B_i = −1`, `b = 0`, `f = ½‖(x, y)‖²`.
    fn coupled_oracle() -> QuadraticOracle {
        let layout = BlockLayout::scalar(2).unwrap();
        let leader = QuadraticForm::new(DMatrix::identity(3, 3), DVector::zeros(3), 0.0).unwrap();
        let follower = |i: usize| {
            let (own, other) = (i + 1, 2 - i);
            let mut h = DMatrix::zeros(3, 3);
            h[(own, own)] = 2.0;
            h[(own, other)] = 1.0;
            h[(other, own)] = 1.0;
            h[(own, 0)] = -1.0;
            h[(0, own)] = -1.0;
            QuadraticForm::new(h, DVector::zeros(3), 0.0).unwrap()
        };
        let spec = QuadraticGameSpec::new(layout, leader, vec![follower(0), follower(1)]).unwrap();
        QuadraticOracle::new(spec, unit_constants()).unwrap()
    }

    #[test]
    fn equilibrium_examples() {
        let o = sq2_oracle(0.0);
        assert_eq!(o.exact_followers_equilibrium(&[0.5]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(o.exact_followers_equilibrium(&[0.0]).unwrap(), vec![0.0, 0.0]);
        let y = coupled_oracle().exact_followers_equilibrium(&[3.0]).unwrap();
        assert_abs_diff_eq!(y[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(y[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn implicit_jacobian_examples() {
        let j = sq2_oracle(0.0).exact_implicit_jacobian().clone();
        assert_abs_diff_eq!(j[(0, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(j[(1, 0)], 1.0, epsilon = 1e-15);
        let o = coupled_oracle();
        let j = o.exact_implicit_jacobian();
        assert_abs_diff_eq!(j[(0, 0)], 1.0 / 3.0, epsilon = 1e-15);
        let residual = o.spec().h_x() + o.spec().h_y() * j;
        assert!(residual.amax() <= 1e-12);
    }

    #[test]
    fn true_gradient_examples() {
        let o = sq2_oracle(0.0);
        assert_abs_diff_eq!(o.exact_true_gradient(&[1.0]).unwrap()[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(o.exact_true_gradient(&[0.0]).unwrap()[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(o.exact_true_gradient(&[-2.0]).unwrap()[0], -6.0, epsilon = 1e-14);
    }

    #[test]
    fn stackelberg_point_examples() {
        let p = sq2_oracle(0.0).exact_stackelberg_point().unwrap();
        assert_abs_diff_eq!(p.x[0], 0.0, epsilon = 1e-14);
        let p = sq2_oracle(1.0).exact_stackelberg_point().unwrap();
        assert_abs_diff_eq!(p.x[0], 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.y[0], 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.y[1], 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn indefinite_reduced_quadratic_has_no_equilibrium() {
        let base = sq2_oracle(0.0);
        let mut h = DMatrix::zeros(3, 3);
        h[(0, 0)] = -5.0;
        let leader = QuadraticForm::new(h, DVector::zeros(3), 0.0).unwrap();
        let spec = QuadraticGameSpec::new(
            base.spec().layout().clone(),
            leader,
            vec![base.spec().follower(0).clone(), base.spec().follower(1).clone()],
        )
        .unwrap();
        let o = QuadraticOracle::new(spec, unit_constants()).unwrap();
        assert!(matches!(o.exact_stackelberg_point(), Err(Error::NoEquilibrium(_))));
    }

    #[test]
    fn lagrangian_minimizer_examples() {
        let o = sq2_oracle(0.0);
        // the declared constants give threshold 2; lower it to reach λ = 1
        let o1 = o
            .clone()
            .with_constants(SmoothnessConstants {
                mu_g: 2.0,
                ..unit_constants()
            })
            .unwrap();
        let y = o1.exact_lagrangian_minimizer(1.0, &[1.0]).unwrap();
        assert_abs_diff_eq!(y[0], 0.5, epsilon = 1e-14);
        let y = o.exact_lagrangian_minimizer(9.0, &[1.0]).unwrap();
        assert_abs_diff_eq!(y[1], 0.9, epsilon = 1e-14);
        let y = coupled_oracle()
            .exact_lagrangian_minimizer(2f64.powi(20), &[0.7])
            .unwrap();
        let ys = coupled_oracle().exact_followers_equilibrium(&[0.7]).unwrap();
        assert!(vector::dist(&y, &ys) <= 1e-5);
        assert!(matches!(
            o.exact_lagrangian_minimizer(1.9, &[1.0]),
            Err(Error::ConvexityViolation { .. })
        ));
        let g = o.lagrangian_grad_y(9.0, &[1.0], &[0.9, 0.9]).unwrap();
        assert!(vector::norm(&g) <= 1e-10);
    }

    #[test]
    fn lagrangian_gradients_match_finite_differences() {
        for o in [sq2_oracle(0.4), coupled_oracle()] {
            let lambda = 5.0;
            let x = [0.3];
            let y = [0.2, -0.6];
            let gx = o.lagrangian_grad_x(lambda, &x, &y).unwrap();
            let fd = finite_difference_grad(|v| o.lagrangian_value(lambda, v, &y).unwrap(), &x, 1e-5).unwrap();
            assert_abs_diff_eq!(gx[0], fd[0], epsilon = 1e-7);
            let gy = o.lagrangian_grad_y(lambda, &x, &y).unwrap();
            let fd = finite_difference_grad(|v| o.lagrangian_value(lambda, &x, v).unwrap(), &y, 1e-5).unwrap();
            assert!(vector::dist(&gy, &fd) <= 1e-7);
            // envelope: the reduced Lagrangian's derivative
            let reduced = |v: &[f64]| {
                let ym = o.exact_lagrangian_minimizer(lambda, v).unwrap();
                o.lagrangian_value(lambda, v, &ym).unwrap()
            };
            let fd = finite_difference_grad(reduced, &x, 1e-5).unwrap();
            assert_abs_diff_eq!(o.penalty_gradient(lambda, &x).unwrap()[0], fd[0], epsilon = 1e-7);
        }
    }

    #[test]
    fn true_gradient_matches_finite_differences() {
        for o in [sq2_oracle(0.3), coupled_oracle()] {
            for x in [-1.3, 0.0, 0.8] {
                let fd = finite_difference_grad(|v| o.implicit_value(v).unwrap(), &[x], default_fd_step()).unwrap();
                assert_abs_diff_eq!(o.exact_true_gradient(&[x]).unwrap()[0], fd[0], epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn finite_difference_examples() {
        let g = finite_difference_grad(|v: &[f64]| 0.5 * vector::norm_sq(v), &[3.0, 4.0], 1e-5).unwrap();
        assert_abs_diff_eq!(g[0], 3.0, epsilon = 1e-8);
        assert_abs_diff_eq!(g[1], 4.0, epsilon = 1e-8);
        let g = finite_difference_grad(|_: &[f64]| 7.0, &[1.0, -2.0], 1e-5).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
        assert!(finite_difference_grad(|_: &[f64]| f64::NAN, &[1.0], 1e-5).is_err());
        assert!(finite_difference_grad(|_: &[f64]| 1.0, &[1.0], 0.0).is_err());
    }

    #[test]
    fn factorizations_are_counted() {
        let before = factorization_count();
        let o = sq2_oracle(0.0);
        assert!(factorization_count() > before);
        let mid = factorization_count();
        o.exact_followers_equilibrium(&[1.0]).unwrap();
        assert_eq!(factorization_count(), mid);
    }
}
