use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::linalg;
use crate::error::{check_len, Error, Result};
use crate::model::{BlockLayout, BoxDomain, FollowerCost, LeaderObjective, SmoothnessConstants, StackelbergProblem};
use crate::scalar::Scalar;

/// `½ wᵀ H w + lᵀ w + c` over the joint variable `w = (x, y_1, ..., y_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
}

impl QuadraticForm {
    pub fn new(hessian: DMatrix<f64>, linear: DVector<f64>, constant: f64) -> Result<Self> {
        check_len("quadratic form columns", hessian.nrows(), hessian.ncols())?;
        check_len("quadratic form linear term", hessian.nrows(), linear.len())?;
        let asym = (&hessian - hessian.transpose()).amax();
        if asym > 1e-12 * (1.0 + hessian.amax()) {
            return Err(Error::InvalidParameter(
                "quadratic form Hessian must be symmetric".into(),
            ));
        }
        Ok(Self {
            hessian,
            linear,
            constant,
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            hessian: DMatrix::zeros(dim, dim),
            linear: DVector::zeros(dim),
            constant: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn value(&self, w: &DVector<f64>) -> f64 {
        0.5 * w.dot(&(&self.hessian * w)) + self.linear.dot(w) + self.constant
    }

    pub fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.hessian * w + &self.linear
    }
}

/// Affine-quadratic game: every cost is a quadratic form in `(x, y)`.
///
/// The followers' own gradients are `∇_{y_i} g_i = Σ_j A_ij y_j + B_i x + b_i`,
/// where the blocks are read off the follower Hessians.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticGameSpec {
    layout: BlockLayout,
    leader: QuadraticForm,
    followers: Vec<QuadraticForm>,
    mu_g: f64,
}

impl QuadraticGameSpec {
    /// Validates shapes and that the symmetric part of `H_y = [A_ij]` is
    /// positive definite.
    pub fn new(layout: BlockLayout, leader: QuadraticForm, followers: Vec<QuadraticForm>) -> Result<Self> {
        let dim = layout.n0() + layout.total();
        check_len("follower count", layout.k(), followers.len())?;
        check_len("leader form", dim, leader.dim())?;
        for g in &followers {
            check_len("follower form", dim, g.dim())?;
        }
        let mut spec = Self {
            layout,
            leader,
            followers,
            mu_g: 0.0,
        };
        let mu = linalg::min_sym_eigenvalue(&spec.h_y());
        if !(mu > 0.0) {
            return Err(Error::MonotonicityViolation(format!(
                "symmetric part of the followers' Jacobian has minimum eigenvalue {mu}"
            )));
        }
        spec.mu_g = mu;
        Ok(spec)
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn leader(&self) -> &QuadraticForm {
        &self.leader
    }

    pub fn follower(&self, i: usize) -> &QuadraticForm {
        &self.followers[i]
    }

    /// Exact strong-monotonicity modulus: the minimum eigenvalue of the
    /// symmetric part of `H_y`.
    pub fn mu_g(&self) -> f64 {
        self.mu_g
    }

    pub(crate) fn n0(&self) -> usize {
        self.layout.n0()
    }

    pub(crate) fn n(&self) -> usize {
        self.layout.total()
    }

    /// Joint-coordinate row range of follower block `i`.
    pub(crate) fn y_rows(&self, i: usize) -> std::ops::Range<usize> {
        let b = self.layout.block(i);
        b.start + self.n0()..b.end + self.n0()
    }

    pub(crate) fn joint(&self, x: &[f64], y: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.n0() + self.n(), x.iter().chain(y).copied())
    }

    /// Stacked `[A_ij]` (N × N).
    pub fn h_y(&self) -> DMatrix<f64> {
        let (n0, n) = (self.n0(), self.n());
        let mut h = DMatrix::zeros(n, n);
        for i in 0..self.layout.k() {
            let rows = self.y_rows(i);
            let len = rows.len();
            h.rows_mut(rows.start - n0, len)
                .copy_from(&self.followers[i].hessian.view((rows.start, n0), (len, n)));
        }
        h
    }

    /// Stacked `[B_i]` (N × n0).
    pub fn h_x(&self) -> DMatrix<f64> {
        let (n0, n) = (self.n0(), self.n());
        let mut h = DMatrix::zeros(n, n0);
        for i in 0..self.layout.k() {
            let rows = self.y_rows(i);
            let len = rows.len();
            h.rows_mut(rows.start - n0, len)
                .copy_from(&self.followers[i].hessian.view((rows.start, 0), (len, n0)));
        }
        h
    }

    /// Stacked `[b_i]`.
    pub fn offset(&self) -> DVector<f64> {
        let n0 = self.n0();
        let mut b = DVector::zeros(self.n());
        for i in 0..self.layout.k() {
            for r in self.y_rows(i) {
                b[r - n0] = self.followers[i].linear[r];
            }
        }
        b
    }

    /// Block-diagonal `diag(A_11, ..., A_kk)`.
    pub fn own_curvature(&self) -> DMatrix<f64> {
        let n0 = self.n0();
        let mut d = DMatrix::zeros(self.n(), self.n());
        for i in 0..self.layout.k() {
            let rows = self.y_rows(i);
            let len = rows.len();
            d.view_mut((rows.start - n0, rows.start - n0), (len, len))
                .copy_from(&self.followers[i].hessian.view((rows.start, rows.start), (len, len)));
        }
        d
    }

    /// Constants valid over the given boxes. Lipschitz bounds are taken as
    /// per-row suprema of the affine gradient maps over the joint box.
    pub fn derive_constants(&self, x_box: &BoxDomain<f64>, y_box: &BoxDomain<f64>) -> Result<SmoothnessConstants<f64>> {
        check_len("leader box", self.n0(), x_box.dim())?;
        check_len("follower box", self.n(), y_box.dim())?;
        let lower: Vec<f64> = x_box.lower().iter().chain(y_box.lower()).copied().collect();
        let upper: Vec<f64> = x_box.upper().iter().chain(y_box.upper()).copied().collect();
        let n0 = self.n0();
        let dim = n0 + self.n();

        let sup_rows = |form: &QuadraticForm, start: usize, len: usize| {
            let m = form.hessian.view((start, 0), (len, dim)).clone_owned();
            let off = form.linear.rows(start, len).clone_owned();
            linalg::affine_sup_norm(&m, &off, &lower, &upper)
        };

        let mut ell_f0 = sup_rows(&self.leader, 0, n0);
        for i in 0..self.layout.k() {
            let rows = self.y_rows(i);
            ell_f0 = ell_f0.max(sup_rows(&self.leader, rows.start, rows.len()));
        }
        let ell_g0 = (0..self.layout.k())
            .map(|i| sup_rows(&self.followers[i], 0, n0))
            .fold(0.0, f64::max);

        let ell_f1 = linalg::spectral_norm(&self.leader.hessian);
        let ell_g1 = self
            .followers
            .iter()
            .map(|g| linalg::spectral_norm(&g.hessian))
            .fold(0.0, f64::max)
            .max(linalg::spectral_norm(&self.h_y()))
            .max(linalg::spectral_norm(&self.h_x()));

        let constants = SmoothnessConstants {
            mu_g: self.mu_g,
            ell_f0,
            ell_f1,
            ell_g0,
            ell_g1,
            ell_g2: 0.0,
        };
        constants.validate()?;
        Ok(constants)
    }

    /// A problem whose oracles evaluate the quadratic forms directly.
    pub fn to_problem<T: Scalar>(
        &self,
        name: impl Into<String>,
        constants: SmoothnessConstants<T>,
    ) -> Result<StackelbergProblem<T>> {
        let leader = Arc::new(QuadraticCost::<T>::new(&self.leader, self.n0(), None));
        let followers = (0..self.layout.k())
            .map(|i| {
                Arc::new(QuadraticCost::<T>::new(
                    &self.followers[i],
                    self.n0(),
                    Some(self.y_rows(i)),
                )) as Arc<dyn FollowerCost<T>>
            })
            .collect();
        StackelbergProblem::new(name, leader, followers, self.layout.clone(), constants)
    }
}

/// Oracle adapter evaluating a `QuadraticForm` in the solver's scalar type.
struct QuadraticCost<T> {
    hessian: Vec<T>,
    linear: Vec<T>,
    constant: T,
    dim: usize,
    n0: usize,
    own: Option<std::ops::Range<usize>>,
}

impl<T: Scalar> QuadraticCost<T> {
    fn new(form: &QuadraticForm, n0: usize, own: Option<std::ops::Range<usize>>) -> Self {
        let dim = form.dim();
        let mut hessian = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                hessian.push(T::lit(form.hessian[(r, c)]));
            }
        }
        Self {
            hessian,
            linear: form.linear.iter().map(|&v| T::lit(v)).collect(),
            constant: T::lit(form.constant),
            dim,
            n0,
            own,
        }
    }

    fn joint(&self, x: &[T], y: &[T]) -> Vec<T> {
        x.iter().chain(y).copied().collect()
    }

    fn grad_rows(&self, w: &[T], rows: std::ops::Range<usize>) -> Vec<T> {
        rows.map(|r| {
            let row = &self.hessian[r * self.dim..(r + 1) * self.dim];
            row.iter().zip(w).map(|(&a, &b)| a * b).sum::<T>() + self.linear[r]
        })
        .collect()
    }

    fn eval(&self, x: &[T], y: &[T]) -> T {
        let w = self.joint(x, y);
        let hw = self.grad_rows(&w, 0..self.dim);
        // ½ wᵀHw + lᵀw = ½ wᵀ(Hw + l) + ½ lᵀw
        let half = T::lit(0.5);
        w.iter()
            .zip(&hw)
            .zip(&self.linear)
            .map(|((&wi, &gi), &li)| half * wi * (gi + li))
            .sum::<T>()
            + self.constant
    }
}

impl<T: Scalar> LeaderObjective<T> for QuadraticCost<T> {
    fn value(&self, x: &[T], y: &[T]) -> T {
        self.eval(x, y)
    }

    fn grad_x(&self, x: &[T], y: &[T]) -> Vec<T> {
        self.grad_rows(&self.joint(x, y), 0..self.n0)
    }

    fn grad_y(&self, x: &[T], y: &[T]) -> Vec<T> {
        self.grad_rows(&self.joint(x, y), self.n0..self.dim)
    }
}

impl<T: Scalar> FollowerCost<T> for QuadraticCost<T> {
    fn value(&self, x: &[T], y: &[T]) -> T {
        self.eval(x, y)
    }

    fn grad_x(&self, x: &[T], y: &[T]) -> Vec<T> {
        self.grad_rows(&self.joint(x, y), 0..self.n0)
    }

    fn grad_own(&self, x: &[T], y: &[T]) -> Vec<T> {
        let own = self.own.clone().expect("follower form carries its own block");
        self.grad_rows(&self.joint(x, y), own)
    }
}
