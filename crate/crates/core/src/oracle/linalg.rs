//! Dense linear algebra for the ground-truth oracle. Every factorization or
//! eigen-decomposition goes through here and is counted, so tests can show
//! the solver path never touches second-order machinery.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

thread_local! {
    static FACTORIZATIONS: Cell<usize> = const { Cell::new(0) };
}

/// Number of factorizations performed on the current thread.
pub fn factorization_count() -> usize {
    FACTORIZATIONS.with(|c| c.get())
}

fn record() {
    FACTORIZATIONS.with(|c| c.set(c.get() + 1));
}

pub(crate) fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    record();
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::NoEquilibrium("singular linear system".into()))
}

pub(crate) fn solve_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    record();
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::NoEquilibrium("singular linear system".into()))
}

pub(crate) fn symmetric_part(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Smallest eigenvalue of the symmetric part of `a`.
pub(crate) fn min_sym_eigenvalue(a: &DMatrix<f64>) -> f64 {
    record();
    SymmetricEigen::new(symmetric_part(a)).eigenvalues.min()
}

pub(crate) fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    record();
    a.clone().svd(false, false).singular_values.max()
}

/// Upper bound on `sup ‖M w + m‖` over the box `lower ≤ w ≤ upper`, exact
/// per row.
pub(crate) fn affine_sup_norm(m: &DMatrix<f64>, offset: &DVector<f64>, lower: &[f64], upper: &[f64]) -> f64 {
    let mut acc = 0.0;
    for r in 0..m.nrows() {
        let mut hi = offset[r];
        let mut lo = offset[r];
        for c in 0..m.ncols() {
            let a = m[(r, c)] * lower[c];
            let b = m[(r, c)] * upper[c];
            hi += a.max(b);
            lo += a.min(b);
        }
        let row = hi.abs().max(lo.abs());
        acc += row * row;
    }
    acc.sqrt()
}
