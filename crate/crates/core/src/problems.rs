//! Built-in affine-quadratic instances. Each carries hand-written oracles and,
//! independently, the matrix description consumed by the exact oracle.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{
    check_strong_monotonicity, BlockLayout, BoxDomain, FollowerCost, JointPoint, LeaderObjective, SmoothnessConstants,
    StackelbergProblem,
};
use crate::oracle::{QuadraticForm, QuadraticGameSpec, QuadraticOracle};
use crate::scalar::Scalar;
use crate::vector;

/// A named instance with its default starting point.
#[derive(Clone)]
pub struct ProblemCatalogEntry<T> {
    pub name: String,
    /// Builder arguments, for display.
    pub params: String,
    pub problem: StackelbergProblem<T>,
    pub spec: Option<QuadraticGameSpec>,
    pub initial: JointPoint<T>,
}

impl<T: Scalar> std::fmt::Debug for ProblemCatalogEntry<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemCatalogEntry")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("problem", &self.problem)
            .field("initial", &self.initial)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> ProblemCatalogEntry<T> {
    /// Exact oracle with the declared constants, when the entry is quadratic.
    pub fn oracle(&self) -> Option<Result<QuadraticOracle>> {
        let spec = self.spec.clone()?;
        Some(QuadraticOracle::new(spec, constants_to_f64(self.problem.constants())))
    }

    /// Monotonicity with the declared modulus, agreement of the hand-written
    /// oracles with the matrix description, and equilibria inside the box.
    pub fn validate(&self) -> Result<()> {
        let report = check_strong_monotonicity(&self.problem, 200, 11, Some(T::lit(2.0)))?;
        if !report.pass {
            return Err(Error::MonotonicityViolation(format!(
                "{}: sampled ratio {} below declared mu_g {}",
                self.name,
                report.min_ratio,
                self.problem.constants().mu_g
            )));
        }
        let Some(spec) = &self.spec else {
            return Ok(());
        };
        let reference = spec.to_problem::<T>(self.name.clone(), *self.problem.constants())?;
        let x_box = sampling_box(self.problem.x_domain(), self.problem.layout().n0())?;
        let y_box = sampling_box(self.problem.y_domain(), self.problem.layout().total())?;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(64.0));
        for _ in 0..20 {
            let x = x_box.sample(&mut rng);
            let y = y_box.sample(&mut rng);
            let scale = T::one() + vector::norm(&x) + vector::norm(&y);
            let mut pairs = vec![
                (self.problem.leader().grad_x(&x, &y), reference.leader().grad_x(&x, &y)),
                (self.problem.leader().grad_y(&x, &y), reference.leader().grad_y(&x, &y)),
                (
                    vec![self.problem.leader().value(&x, &y)],
                    vec![reference.leader().value(&x, &y)],
                ),
            ];
            for i in 0..self.problem.k() {
                let (a, b) = (self.problem.follower(i), reference.follower(i));
                pairs.push((a.grad_x(&x, &y), b.grad_x(&x, &y)));
                pairs.push((a.grad_own(&x, &y), b.grad_own(&x, &y)));
                pairs.push((vec![a.value(&x, &y)], vec![b.value(&x, &y)]));
            }
            for (a, b) in pairs {
                if a.len() != b.len() || vector::dist(&a, &b) > tol * scale * scale {
                    return Err(Error::InvalidParameter(format!(
                        "{}: oracle disagrees with its quadratic description",
                        self.name
                    )));
                }
            }
        }
        if let (Some(xd), Some(yd)) = (self.problem.x_domain(), self.problem.y_domain()) {
            let oracle = QuadraticOracle::new(spec.clone(), constants_to_f64(self.problem.constants()))?;
            let yd = BoxDomain::new(vector::to_f64(yd.lower()), vector::to_f64(yd.upper()))?;
            for corner in corners(&vector::to_f64(xd.lower()), &vector::to_f64(xd.upper())) {
                let ys = oracle.exact_followers_equilibrium(&corner)?;
                let mut projected = ys.clone();
                yd.project(&mut projected);
                if vector::dist(&projected, &ys) > 1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "{}: followers' equilibrium leaves the box at x = {corner:?}",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

fn sampling_box<T: Scalar>(d: Option<&BoxDomain<T>>, dim: usize) -> Result<BoxDomain<T>> {
    match d {
        Some(d) => Ok(d.clone()),
        None => BoxDomain::uniform(dim, T::lit(-2.0), T::lit(2.0)),
    }
}

/// Vertices of a box (the equilibrium map is affine, so these bound it).
fn corners(lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for (l, h) in lo.iter().zip(hi) {
        out = out
            .into_iter()
            .flat_map(|c| {
                let mut a = c.clone();
                a.push(*l);
                let mut b = c;
                b.push(*h);
                [a, b]
            })
            .collect();
    }
    out
}

pub(crate) fn constants_to_f64<T: Scalar>(c: &SmoothnessConstants<T>) -> SmoothnessConstants<f64> {
    SmoothnessConstants {
        mu_g: c.mu_g.as_f64(),
        ell_f0: c.ell_f0.as_f64(),
        ell_f1: c.ell_f1.as_f64(),
        ell_g0: c.ell_g0.as_f64(),
        ell_g1: c.ell_g1.as_f64(),
        ell_g2: c.ell_g2.as_f64(),
    }
}

fn constants_from_f64<T: Scalar>(c: &SmoothnessConstants<f64>) -> SmoothnessConstants<T> {
    SmoothnessConstants {
        mu_g: T::lit(c.mu_g),
        ell_f0: T::lit(c.ell_f0),
        ell_f1: T::lit(c.ell_f1),
        ell_g0: T::lit(c.ell_g0),
        ell_g1: T::lit(c.ell_g1),
        ell_g2: T::lit(c.ell_g2),
    }
}

// ---------------------------------------------------------------------------
// symmetric quadratic

/// `f = ½‖x − s‖² + ½‖y‖²`.
struct ShiftedLeader<T> {
    shift: Vec<T>,
}

impl<T: Scalar> LeaderObjective<T> for ShiftedLeader<T> {
    fn value(&self, x: &[T], y: &[T]) -> T {
        T::lit(0.5) * (vector::dist(x, &self.shift).powi(2) + vector::norm_sq(y))
    }

    fn grad_x(&self, x: &[T], _y: &[T]) -> Vec<T> {
        vector::sub(x, &self.shift)
    }

    fn grad_y(&self, _x: &[T], y: &[T]) -> Vec<T> {
        y.to_vec()
    }
}

/// `g_i = ½‖y_i − x‖² + c ⟨y_i, Σ_{j≠i} y_j⟩`.
struct CoupledTracker<T> {
    index: usize,
    k: usize,
    coupling: T,
}

impl<T: Scalar> CoupledTracker<T> {
    fn others_sum(&self, y: &[T], d: usize) -> Vec<T> {
        let mut s = vec![T::zero(); d];
        for j in (0..self.k).filter(|&j| j != self.index) {
            vector::axpy(&mut s, T::one(), &y[j * d..(j + 1) * d]);
        }
        s
    }

    fn own<'a>(&self, y: &'a [T], d: usize) -> &'a [T] {
        &y[self.index * d..(self.index + 1) * d]
    }
}

impl<T: Scalar> FollowerCost<T> for CoupledTracker<T> {
    fn value(&self, x: &[T], y: &[T]) -> T {
        let d = x.len();
        let own = self.own(y, d);
        T::lit(0.5) * vector::dist(own, x).powi(2) + self.coupling * vector::dot(own, &self.others_sum(y, d))
    }

    fn grad_x(&self, x: &[T], y: &[T]) -> Vec<T> {
        vector::sub(x, self.own(y, x.len()))
    }

    fn grad_own(&self, x: &[T], y: &[T]) -> Vec<T> {
        let d = x.len();
        let mut g = vector::sub(self.own(y, d), x);
        vector::axpy(&mut g, self.coupling, &self.others_sum(y, d));
        g
    }
}

fn symmetric_spec(k: usize, d: usize, coupling: f64, shift: &[f64]) -> Result<QuadraticGameSpec> {
    let layout = BlockLayout::new(d, vec![d; k])?;
    let dim = d * (k + 1);
    let s = DVector::from_column_slice(shift);
    let mut leader_lin = DVector::zeros(dim);
    leader_lin.rows_mut(0, d).copy_from(&(-&s));
    let leader = QuadraticForm::new(DMatrix::identity(dim, dim), leader_lin, 0.5 * s.norm_squared())?;
    let followers = (0..k)
        .map(|i| {
            let mut h = DMatrix::zeros(dim, dim);
            let own = d * (i + 1);
            for r in 0..d {
                h[(r, r)] = 1.0;
                h[(own + r, own + r)] = 1.0;
                h[(r, own + r)] = -1.0;
                h[(own + r, r)] = -1.0;
                for j in (0..k).filter(|&j| j != i) {
                    let other = d * (j + 1);
                    h[(own + r, other + r)] = coupling;
                    h[(other + r, own + r)] = coupling;
                }
            }
            QuadraticForm::new(h, DVector::zeros(dim), 0.0)
        })
        .collect::<Result<Vec<_>>>()?;
    QuadraticGameSpec::new(layout, leader, followers)
}

/// `k` followers tracking the leader with pairwise coupling, and a leader
/// pulled toward `leader_shift`. Requires `|coupling| (k − 1) < 1`; the
/// declared `μ_g = 1 − coupling (k − 1)`.
pub fn make_symmetric_quadratic<T: Scalar>(
    k: usize,
    coupling: f64,
    leader_shift: &[f64],
) -> Result<ProblemCatalogEntry<T>> {
    if k == 0 || leader_shift.is_empty() {
        return Err(Error::InvalidParameter("need k ≥ 1 and a nonempty leader shift".into()));
    }
    let mu_g = 1.0 - coupling * (k as f64 - 1.0);
    if !(coupling.abs() * (k as f64 - 1.0) < 1.0) || !(0.0..1.0).contains(&coupling) {
        return Err(Error::MonotonicityViolation(format!(
            "coupling {coupling} with k = {k} breaks strong monotonicity"
        )));
    }
    let d = leader_shift.len();
    let spec = symmetric_spec(k, d, coupling, leader_shift)?;
    let half_width = 1.0 + leader_shift.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let x_box = BoxDomain::uniform(d, -half_width, half_width)?;
    let y_box = BoxDomain::uniform(d * k, -half_width, half_width)?;
    let derived = spec.derive_constants(&x_box, &y_box)?;
    let constants = SmoothnessConstants { mu_g, ..derived };

    let leader = Arc::new(ShiftedLeader {
        shift: vector::from_f64::<T>(leader_shift),
    });
    let followers = (0..k)
        .map(|index| {
            Arc::new(CoupledTracker {
                index,
                k,
                coupling: T::lit(coupling),
            }) as Arc<dyn FollowerCost<T>>
        })
        .collect();
    let name = if k == 2 && coupling == 0.0 && leader_shift.iter().all(|&v| v == 0.0) && d == 1 {
        "sq2".to_string()
    } else {
        format!("coupled-k{k}-c{coupling}")
    };
    let problem = StackelbergProblem::new(
        name.clone(),
        leader,
        followers,
        spec.layout().clone(),
        constants_from_f64(&constants),
    )?
    .with_domains(
        Some(BoxDomain::uniform(d, T::lit(-half_width), T::lit(half_width))?),
        Some(BoxDomain::uniform(d * k, T::lit(-half_width), T::lit(half_width))?),
    )?;
    Ok(ProblemCatalogEntry {
        name,
        params: format!("k={k} coupling={coupling} shift={leader_shift:?}"),
        problem,
        spec: Some(spec),
        initial: JointPoint::new(vec![T::one(); d], vec![T::zero(); d * k]),
    })
}

/// The canonical two-follower instance `f = ½x² + ½‖y‖²`, `g_i = ½(y_i − x)²`.
pub fn sq2<T: Scalar>() -> ProblemCatalogEntry<T> {
    make_symmetric_quadratic(2, 0.0, &[0.0]).expect("canonical instance is valid")
}

// ---------------------------------------------------------------------------
// Cournot

/// Market parameters for [`make_cournot`].
#[derive(Debug, Clone, PartialEq)]
pub struct CournotParams {
    pub k: usize,
    /// Demand intercept `a`.
    pub intercept: f64,
    /// Demand slope `b`.
    pub slope: f64,
    /// Marginal costs `c_i`.
    pub costs: Vec<f64>,
    /// Weight of the leader's quantity-targeting term.
    pub tax_weight: f64,
    pub target: f64,
    /// Upper end of the tax range. Defaults to the largest tax keeping every
    /// equilibrium quantity non-negative.
    pub tax_cap: Option<f64>,
}

impl CournotParams {
    pub fn symmetric(k: usize, intercept: f64, slope: f64, tax_weight: f64) -> Self {
        Self {
            k,
            intercept,
            slope,
            costs: vec![1.0; k],
            tax_weight,
            target: 0.0,
            tax_cap: None,
        }
    }
}

/// `f = −x Σ y_i + w ½‖y − y_T‖²`.
struct TaxLeader<T> {
    weight: T,
    target: T,
}

impl<T: Scalar> LeaderObjective<T> for TaxLeader<T> {
    fn value(&self, x: &[T], y: &[T]) -> T {
        let total: T = y.iter().copied().sum();
        let spread: T = y.iter().map(|&v| (v - self.target) * (v - self.target)).sum();
        -x[0] * total + self.weight * T::lit(0.5) * spread
    }

    fn grad_x(&self, _x: &[T], y: &[T]) -> Vec<T> {
        vec![-y.iter().copied().sum::<T>()]
    }

    fn grad_y(&self, x: &[T], y: &[T]) -> Vec<T> {
        y.iter().map(|&v| -x[0] + self.weight * (v - self.target)).collect()
    }
}

/// `g_i = −(a − b Σ y) y_i + (c_i + x) y_i`.
struct Firm<T> {
    index: usize,
    intercept: T,
    slope: T,
    cost: T,
}

impl<T: Scalar> FollowerCost<T> for Firm<T> {
    fn value(&self, x: &[T], y: &[T]) -> T {
        let total: T = y.iter().copied().sum();
        let q = y[self.index];
        -(self.intercept - self.slope * total) * q + (self.cost + x[0]) * q
    }

    fn grad_x(&self, _x: &[T], y: &[T]) -> Vec<T> {
        vec![y[self.index]]
    }

    fn grad_own(&self, x: &[T], y: &[T]) -> Vec<T> {
        let total: T = y.iter().copied().sum();
        vec![-self.intercept + self.slope * total + self.slope * y[self.index] + self.cost + x[0]]
    }
}

fn cournot_spec(p: &CournotParams) -> Result<QuadraticGameSpec> {
    let k = p.k;
    let dim = k + 1;
    let layout = BlockLayout::scalar(k)?;
    let mut lh = DMatrix::zeros(dim, dim);
    let mut ll = DVector::zeros(dim);
    for i in 1..dim {
        lh[(0, i)] = -1.0;
        lh[(i, 0)] = -1.0;
        lh[(i, i)] = p.tax_weight;
        ll[i] = -p.tax_weight * p.target;
    }
    let leader = QuadraticForm::new(lh, ll, 0.5 * p.tax_weight * p.target * p.target * k as f64)?;
    let followers = (0..k)
        .map(|i| {
            let own = i + 1;
            let mut h = DMatrix::zeros(dim, dim);
            h[(own, own)] = 2.0 * p.slope;
            for j in (1..dim).filter(|&j| j != own) {
                h[(own, j)] = p.slope;
                h[(j, own)] = p.slope;
            }
            h[(0, own)] = 1.0;
            h[(own, 0)] = 1.0;
            let mut l = DVector::zeros(dim);
            l[own] = p.costs[i] - p.intercept;
            QuadraticForm::new(h, l, 0.0)
        })
        .collect::<Result<Vec<_>>>()?;
    QuadraticGameSpec::new(layout, leader, followers)
}

/// Leader sets a per-unit tax `x`; `k` firms choose quantities in
/// `[0, 2a/b]`. `μ_g = b`.
pub fn make_cournot<T: Scalar>(params: &CournotParams) -> Result<ProblemCatalogEntry<T>> {
    let p = params;
    if p.k == 0 || p.costs.len() != p.k {
        return Err(Error::InvalidParameter(
            "Cournot needs k ≥ 1 and one cost per firm".into(),
        ));
    }
    if !(p.slope > 0.0) || !(p.intercept > 0.0) || !(p.tax_weight >= 0.0) {
        return Err(Error::InvalidParameter(
            "Cournot needs a > 0, b > 0 and a non-negative tax weight".into(),
        ));
    }
    let total_cost: f64 = p.costs.iter().sum();
    let kp1 = p.k as f64 + 1.0;
    let natural_cap = p
        .costs
        .iter()
        .map(|c| p.intercept - kp1 * c + total_cost)
        .fold(f64::INFINITY, f64::min);
    let tax_cap = p.tax_cap.unwrap_or(natural_cap);
    if !(tax_cap > 0.0) || tax_cap > natural_cap {
        return Err(Error::InvalidParameter(format!(
            "tax cap {tax_cap} must lie in (0, {natural_cap}] to keep quantities non-negative"
        )));
    }
    let spec = cournot_spec(p)?;
    let q_max = 2.0 * p.intercept / p.slope;
    let x_box = BoxDomain::uniform(1, 0.0, tax_cap)?;
    let y_box = BoxDomain::uniform(p.k, 0.0, q_max)?;
    let derived = spec.derive_constants(&x_box, &y_box)?;
    let constants = SmoothnessConstants {
        mu_g: p.slope,
        ..derived
    };

    let leader = Arc::new(TaxLeader {
        weight: T::lit(p.tax_weight),
        target: T::lit(p.target),
    });
    let followers = (0..p.k)
        .map(|index| {
            Arc::new(Firm {
                index,
                intercept: T::lit(p.intercept),
                slope: T::lit(p.slope),
                cost: T::lit(p.costs[index]),
            }) as Arc<dyn FollowerCost<T>>
        })
        .collect();
    let name = format!("cournot-k{}", p.k);
    let problem = StackelbergProblem::new(
        name.clone(),
        leader,
        followers,
        spec.layout().clone(),
        constants_from_f64(&constants),
    )?
    .with_domains(
        Some(BoxDomain::uniform(1, T::zero(), T::lit(tax_cap))?),
        Some(BoxDomain::uniform(p.k, T::zero(), T::lit(q_max))?),
    )?;
    Ok(ProblemCatalogEntry {
        name,
        params: format!("{p:?}"),
        problem,
        spec: Some(spec),
        initial: JointPoint::new(vec![T::lit(tax_cap / 4.0)], vec![T::zero(); p.k]),
    })
}

fn renamed<T: Scalar>(mut entry: ProblemCatalogEntry<T>, name: &str) -> ProblemCatalogEntry<T> {
    entry.name = name.to_string();
    entry
}

/// Names in [`catalog`] order.
pub const CATALOG_NAMES: [&str; 6] = [
    "sq2",
    "coupled-0.25",
    "coupled-0.5",
    "coupled-0.75",
    "cournot-a",
    "cournot-b",
];

/// Every built-in instance, validated.
pub fn catalog<T: Scalar>() -> Result<Vec<ProblemCatalogEntry<T>>> {
    let mut out = vec![sq2::<T>()];
    for (name, c) in [("coupled-0.25", 0.25), ("coupled-0.5", 0.5), ("coupled-0.75", 0.75)] {
        out.push(renamed(make_symmetric_quadratic(2, c, &[0.0])?, name));
    }
    out.push(renamed(
        make_cournot(&CournotParams {
            k: 2,
            intercept: 10.0,
            slope: 1.0,
            costs: vec![1.0, 1.0],
            tax_weight: 0.0,
            target: 0.0,
            tax_cap: None,
        })?,
        "cournot-a",
    ));
    out.push(renamed(
        make_cournot(&CournotParams {
            k: 3,
            intercept: 12.0,
            slope: 2.0,
            costs: vec![1.0, 2.0, 3.0],
            tax_weight: 0.5,
            target: 1.0,
            tax_cap: Some(5.0),
        })?,
        "cournot-b",
    ));
    for e in &out {
        e.validate()?;
    }
    Ok(out)
}

/// Looks up a catalog entry by name.
pub fn by_name<T: Scalar>(name: &str) -> Result<ProblemCatalogEntry<T>> {
    catalog::<T>()?
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown problem '{name}'")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn catalog_shape() {
        let c = catalog::<f64>().unwrap();
        assert_eq!(c.len(), 6);
        let names: Vec<&str> = c.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(names, CATALOG_NAMES);
    }

    #[test]
    fn sq2_constants() {
        let c = *sq2::<f64>().problem.constants();
        assert_eq!(c.mu_g, 1.0);
        assert_abs_diff_eq!(c.ell_f1, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.ell_g1, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.ell_f0, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.ell_g0, 2.0, epsilon = 1e-12);
        assert_eq!(c.ell_g2, 0.0);
    }

    #[test]
    fn coupled_equilibrium_example() {
        let e = make_symmetric_quadratic::<f64>(2, 0.5, &[0.0]).unwrap();
        assert_eq!(e.problem.constants().mu_g, 0.5);
        let y = e
            .oracle()
            .unwrap()
            .unwrap()
            .exact_followers_equilibrium(&[1.0])
            .unwrap();
        assert_abs_diff_eq!(y[0], 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(y[1], 2.0 / 3.0, epsilon = 1e-14);
        assert!(matches!(
            make_symmetric_quadratic::<f64>(3, 0.6, &[0.0]),
            Err(Error::MonotonicityViolation(_))
        ));
    }

    #[test]
    fn cournot_examples() {
        let p = CournotParams::symmetric(2, 10.0, 1.0, 0.0);
        let e = make_cournot::<f64>(&p).unwrap();
        let o = e.oracle().unwrap().unwrap();
        let y = o.exact_followers_equilibrium(&[1.0]).unwrap();
        assert_abs_diff_eq!(y[0], 8.0 / 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(y[1], 8.0 / 3.0, epsilon = 1e-13);
        let y = o.exact_followers_equilibrium(&[9.0]).unwrap();
        assert_abs_diff_eq!(y[0], 0.0, epsilon = 1e-13);

        let doubled = make_cournot::<f64>(&CournotParams { slope: 2.0, ..p }).unwrap();
        let y2 = doubled
            .oracle()
            .unwrap()
            .unwrap()
            .exact_followers_equilibrium(&[1.0])
            .unwrap();
        assert_abs_diff_eq!(y2[0], 4.0 / 3.0, epsilon = 1e-13);
        assert_eq!(doubled.problem.constants().mu_g, 2.0);
    }

    #[test]
    fn cournot_rejects_bad_parameters() {
        let p = CournotParams::symmetric(2, 10.0, 1.0, 0.0);
        assert!(make_cournot::<f64>(&CournotParams {
            slope: 0.0,
            ..p.clone()
        })
        .is_err());
        assert!(make_cournot::<f64>(&CournotParams {
            costs: vec![1.0],
            ..p.clone()
        })
        .is_err());
        assert!(make_cournot::<f64>(&CournotParams {
            tax_cap: Some(20.0),
            ..p
        })
        .is_err());
    }

    #[test]
    fn declared_modulus_is_exact_for_catalog() {
        for e in catalog::<f64>().unwrap() {
            let spec = e.spec.as_ref().unwrap();
            assert_abs_diff_eq!(e.problem.constants().mu_g, spec.mu_g(), epsilon = 1e-12);
        }
    }

    #[test]
    fn catalog_builds_in_f32() {
        assert_eq!(catalog::<f32>().unwrap().len(), 6);
    }

    #[test]
    fn corners_enumerate_vertices() {
        assert_eq!(corners(&[0.0, 0.0], &[1.0, 2.0]).len(), 4);
    }
}
