use crate::bounds;
use crate::error::{Error, Result};
use crate::model::SmoothnessConstants;
use crate::scalar::Scalar;

/// Tunables of the three-loop method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleParams<T> {
    /// Penalty growth exponent, `λ_t = t^ρ`.
    pub rho: T,
    pub eps_prime: T,
    /// Leader step. `None` means `1/ℓ_F1`.
    pub eta: Option<T>,
    /// `None` means `max(1, 2ℓ_f1/μ_g)`.
    pub lambda_floor: Option<T>,
    pub lambda_cap: T,
    pub t_max: usize,
    pub target_eps: T,
    pub c_y: T,
    pub c_z: T,
    /// `C_z` in the follower budget. `None` means `k ℓ_g1 max(1, ‖V(x_0, z_0)‖/μ_g)`.
    pub c_const: Option<T>,
    /// Inner loops stop early once their residual is below `tol / λ_t`. Zero
    /// runs every budget to completion.
    pub y_tol: T,
    pub z_tol: T,
}

impl<T: Scalar> ScheduleParams<T> {
    pub fn new(rho: T, eps_prime: T, target_eps: T) -> Self {
        Self {
            rho,
            eps_prime,
            eta: None,
            lambda_floor: None,
            lambda_cap: T::lit(1e8),
            t_max: 500,
            target_eps,
            c_y: T::one(),
            c_z: T::one(),
            c_const: None,
            y_tol: target_eps * T::lit(1e-3),
            z_tol: target_eps * T::lit(1e-3),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.rho > T::one()) {
            return bad("rho must exceed 1");
        }
        if !(self.eps_prime > T::zero()) {
            return bad("eps_prime must be positive");
        }
        if let Some(eta) = self.eta {
            if !(eta > T::zero()) {
                return bad("eta must be positive");
            }
        }
        if let Some(f) = self.lambda_floor {
            if !(f > T::zero()) {
                return bad("lambda_floor must be positive");
            }
        }
        if self.t_max == 0 {
            return bad("t_max must be at least 1");
        }
        if !(self.target_eps > T::zero()) {
            return bad("target_eps must be positive");
        }
        if !(self.c_y > T::zero()) || !(self.c_z > T::zero()) {
            return bad("budget multipliers must be positive");
        }
        if let Some(c) = self.c_const {
            if !(c > T::zero()) {
                return bad("C_z must be positive");
            }
        }
        if !(self.y_tol >= T::zero()) || !(self.z_tol >= T::zero()) {
            return bad("inner tolerances must be non-negative");
        }
        if !(self.lambda_cap >= self.lambda_floor.unwrap_or(T::one())) {
            return bad("lambda_cap must be at least the floor");
        }
        Ok(())
    }

    /// `α = 2(ρ − 1 + ε′)`.
    pub fn alpha(&self) -> T {
        T::lit(2.0) * (self.rho - T::one() + self.eps_prime)
    }

    pub fn resolved_eta(&self, c: &SmoothnessConstants<T>) -> T {
        self.eta.unwrap_or_else(|| T::one() / c.hypergradient_smoothness())
    }

    pub fn resolved_floor(&self, c: &SmoothnessConstants<T>) -> T {
        self.lambda_floor
            .unwrap_or_else(|| T::one().max(bounds::lambda_threshold(c)))
    }
}

/// `λ_t = min(cap, max(floor, t^ρ))` and `δ_t = t^ρ − (t − 1)^ρ`.
pub fn schedule_lambda<T: Scalar>(t: usize, rho: T, floor: T, cap: T) -> Result<(T, T)> {
    if t == 0 {
        return Err(Error::InvalidParameter("outer iterations are numbered from 1".into()));
    }
    let tt = T::from_usize_lossy(t);
    let now = tt.powf(rho);
    let before = (tt - T::one()).powf(rho);
    Ok((floor.max(now).min(cap), now - before))
}

/// `ceil(c_y (ℓ_l/μ_l + 1)((3 + ε′)/2 ln t + ln k))`, at least 1.
pub fn budget_my<T: Scalar>(t: usize, k: usize, mu_l: T, ell_l: T, eps_prime: T, c_y: T) -> usize {
    let tt = T::from_usize_lossy(t.max(1));
    let kk = T::from_usize_lossy(k.max(1));
    let raw = c_y * (ell_l / mu_l + T::one()) * ((T::lit(3.0) + eps_prime) / T::lit(2.0) * tt.ln() + kk.ln());
    ceil_budget(raw)
}

/// `ceil(c_z C_z k t^{ρ+ε′+1} / μ_g)`, at least 1.
pub fn budget_mz<T: Scalar>(t: usize, k: usize, mu_g: T, rho: T, eps_prime: T, c_z: T, c_const: T) -> usize {
    let tt = T::from_usize_lossy(t.max(1));
    let raw = c_z * c_const * T::from_usize_lossy(k) * tt.powf(rho + eps_prime + T::one()) / mu_g;
    ceil_budget(raw)
}

fn ceil_budget<T: Scalar>(raw: T) -> usize {
    let v = raw.ceil().as_f64();
    if v.is_nan() || v < 1.0 {
        1
    } else if v >= usize::MAX as f64 {
        usize::MAX
    } else {
        v as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lambda_examples() {
        let (l, d) = schedule_lambda(4, 1.5, 1.0, 1e8).unwrap();
        assert_eq!(l, 8.0);
        assert_abs_diff_eq!(d, 8.0 - 3f64.powf(1.5), epsilon = 1e-12);
        assert_abs_diff_eq!(d, 2.8038, epsilon = 1e-4);
        assert_eq!(schedule_lambda(1, 1.5, 1.0, 1e8).unwrap(), (1.0, 1.0));
        assert_eq!(schedule_lambda(1, 1.5, 2.0, 1e8).unwrap().0, 2.0);
        assert_eq!(schedule_lambda(3, 2.0, 1.0, 1e8).unwrap(), (9.0, 5.0));
        assert_eq!(schedule_lambda(100, 2.0, 1.0, 50.0).unwrap().0, 50.0);
        assert!(schedule_lambda(0, 2.0, 1.0, 50.0).is_err());
    }

    #[test]
    fn my_examples() {
        assert_eq!(budget_my(10, 2, 1.0, 9.0, 0.1, 1.0), 43);
        assert_eq!(budget_my(1, 1, 1.0, 9.0, 0.1, 1.0), 1);
    }

    #[test]
    fn mz_examples() {
        assert_eq!(budget_mz(2, 2, 1.0, 1.5, 0.1, 1.0, 1.0), 13);
        assert_eq!(budget_mz(1, 2, 1.0, 1.5, 0.1, 3.0, 1.0), 6);
        assert_eq!(budget_mz(1, 2, 0.5, 1.5, 0.1, 1.0, 1.0), 4);
    }

    #[test]
    fn params_validation() {
        let p = ScheduleParams::new(1.5, 0.1, 1e-2);
        assert!(p.validate().is_ok());
        assert_abs_diff_eq!(p.alpha(), 1.2, epsilon = 1e-12);
        assert!(ScheduleParams { rho: 1.0, ..p }.validate().is_err());
        assert!(ScheduleParams { t_max: 0, ..p }.validate().is_err());
        assert!(ScheduleParams { eta: Some(-1.0), ..p }.validate().is_err());
        assert!(ScheduleParams { target_eps: 0.0, ..p }.validate().is_err());
    }
}
