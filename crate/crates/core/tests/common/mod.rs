#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stackelberg_core::problems::{self, ProblemCatalogEntry};
use stackelberg_core::{QuadraticOracle, Scalar, StackelbergProblem};

pub fn quadratic_catalog() -> Vec<(ProblemCatalogEntry<f64>, QuadraticOracle)> {
    problems::catalog::<f64>()
        .unwrap()
        .into_iter()
        .map(|e| {
            let o = e.oracle().expect("catalog entries are quadratic").unwrap();
            (e, o)
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sample_in(lo: Option<&[f64]>, hi: Option<&[f64]>, dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..dim)
        .map(|j| {
            let (a, b) = match (lo, hi) {
                (Some(l), Some(h)) => (l[j], h[j]),
                _ => (-2.0, 2.0),
            };
            rng.gen_range(a..=b)
        })
        .collect()
}

pub fn sample_x<T: Scalar>(p: &StackelbergProblem<T>, rng: &mut impl Rng) -> Vec<f64> {
    let d = p.x_domain();
    let lo = d.map(|d| d.lower().iter().map(|v| v.as_f64()).collect::<Vec<_>>());
    let hi = d.map(|d| d.upper().iter().map(|v| v.as_f64()).collect::<Vec<_>>());
    sample_in(lo.as_deref(), hi.as_deref(), p.layout().n0(), rng)
}

pub fn sample_y<T: Scalar>(p: &StackelbergProblem<T>, rng: &mut impl Rng) -> Vec<f64> {
    let d = p.y_domain();
    let lo = d.map(|d| d.lower().iter().map(|v| v.as_f64()).collect::<Vec<_>>());
    let hi = d.map(|d| d.upper().iter().map(|v| v.as_f64()).collect::<Vec<_>>());
    sample_in(lo.as_deref(), hi.as_deref(), p.layout().total(), rng)
}

/// `‖a − b‖ / max(1, ‖b‖)`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / scale.max(1.0)
}
