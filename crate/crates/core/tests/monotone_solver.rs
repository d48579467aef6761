mod common;

use common::{quadratic_catalog, rng, sample_x, sample_y};
use stackelberg_core::monotone::{extragradient_step, solve_followers_game, MonotoneMethod, MonotoneSolveConfig};
use stackelberg_core::vector;

#[test]
fn extragradient_contracts_geometrically_on_every_quadratic_instance() {
    for (entry, oracle) in quadratic_catalog() {
        let p = &entry.problem;
        let step = 1.0 / (2.0 * p.constants().ell_g1);
        let mut r = rng(41);
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let x = sample_x(p, &mut r);
            let z_star = oracle.exact_followers_equilibrium(&x).unwrap();
            let mut z = sample_y(p, &mut r);
            for _ in 0..200 {
                let before = vector::dist(&z, &z_star);
                if before < 1e-9 {
                    break;
                }
                z = extragradient_step(p, &x, &z, step).unwrap();
                worst = worst.max(vector::dist(&z, &z_star) / before);
            }
        }
        let c = 1.0 - worst;
        assert!(c > 0.0, "{}: per-step ratio {worst}", entry.name);
    }
}

#[test]
fn certificate_improves_tenfold_per_decade_of_budget() {
    for (entry, _) in quadratic_catalog() {
        let p = &entry.problem;
        let x = sample_x(p, &mut rng(2));
        let z0 = vec![0.0; p.layout().total()];
        let norms: Vec<f64> = [10, 100, 1000]
            .iter()
            .map(|&m| {
                let cfg = MonotoneSolveConfig::for_problem(p, m, 0.0);
                let out = solve_followers_game(p, &x, &z0, &cfg).unwrap();
                assert_eq!(out.iters_used, m);
                out.final_operator_norm
            })
            .collect();
        for w in norms.windows(2) {
            // once the residual reaches rounding level there is nothing left to gain
            assert!(w[1] <= w[0] / 10.0 || w[1] <= 1e-12, "{}: {norms:?}", entry.name);
        }
    }
}

#[test]
fn distance_to_equilibrium_is_bounded_by_residual_over_modulus() {
    for (entry, oracle) in quadratic_catalog() {
        let p = &entry.problem;
        let mu = p.constants().mu_g;
        let mut r = rng(8);
        for m in [1, 2, 5, 20, 80] {
            let x = sample_x(p, &mut r);
            let z0 = sample_y(p, &mut r);
            let cfg = MonotoneSolveConfig::for_problem(p, m, 0.0);
            let out = solve_followers_game(p, &x, &z0, &cfg).unwrap();
            let z_star = oracle.exact_followers_equilibrium(&x).unwrap();
            let dist = vector::dist(&out.z, &z_star);
            // V(x, z*) = 0 at an interior equilibrium, so monotonicity gives μ‖z − z*‖ ≤ ‖V(x, z)‖
            let bound = out.final_operator_norm;
            assert!(
                dist <= bound / mu * (1.0 + 1e-9) + 1e-12,
                "{} M={m}: {dist} > {}",
                entry.name,
                bound / mu
            );
        }
    }
}

#[test]
fn simultaneous_gd_also_converges() {
    for (entry, oracle) in quadratic_catalog() {
        let p = &entry.problem;
        let x = sample_x(p, &mut rng(4));
        let cfg = MonotoneSolveConfig {
            method: MonotoneMethod::SimultaneousGd,
            ..MonotoneSolveConfig::for_problem(p, 50_000, 1e-10)
        };
        let out = solve_followers_game(p, &x, &vec![0.0; p.layout().total()], &cfg).unwrap();
        let z_star = oracle.exact_followers_equilibrium(&x).unwrap();
        assert!(vector::dist(&out.z, &z_star) <= 1e-8, "{}", entry.name);
        assert_eq!(out.grad_evals, p.k() + p.k() * out.iters_used);
    }
}

#[test]
fn solves_are_bitwise_deterministic() {
    for (entry, _) in quadratic_catalog() {
        let p = &entry.problem;
        let x = sample_x(p, &mut rng(12));
        let z0 = sample_y(p, &mut rng(13));
        let cfg = MonotoneSolveConfig::for_problem(p, 37, 0.0);
        let a = solve_followers_game(p, &x, &z0, &cfg).unwrap();
        let b = solve_followers_game(p, &x, &z0, &cfg).unwrap();
        assert_eq!(a, b);
        let bits = |v: &[f64]| v.iter().map(|f| f.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.z), bits(&b.z));
    }
}
