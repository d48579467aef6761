mod common;

use common::quadratic_catalog;
use stackelberg_core::oracle::{check_lagrangian_strong_convexity, verify_lemma_bounds, LemmaGrid};
use stackelberg_core::{QuadraticOracle, SmoothnessConstants};

fn sq2() -> QuadraticOracle {
    quadratic_catalog()
        .into_iter()
        .find(|(e, _)| e.name == "sq2")
        .unwrap()
        .1
}

#[test]
fn all_bounds_hold_on_the_sq2_grid() {
    let report = verify_lemma_bounds(&sq2(), &LemmaGrid::scalar(-1.0, 1.0)).unwrap();
    for name in [
        "minimizer_gap",
        "hypergradient_gap",
        "three_term_gradient_bound",
        "minimizer_sensitivity",
    ] {
        let c = report.get(name).unwrap_or_else(|| panic!("missing {name}"));
        assert!(c.evaluated > 0, "{name}");
        assert!(c.pass, "{name}: {}", c.max_ratio);
    }
}

#[test]
fn sq2_gap_decays_like_inverse_multiplier() {
    // on SQ2 the gap is exactly 2|x|/(1+λ); the fitted slope sits just above −1
    let report = verify_lemma_bounds(&sq2(), &LemmaGrid::scalar(-1.0, 1.0)).unwrap();
    let slope = report.gap_decay_slope.unwrap();
    let lambdas: Vec<f64> = (1..=10).map(|p| 2f64.powi(p)).collect();
    let xs: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let ys: Vec<f64> = lambdas.iter().map(|l| (2.0 / (1.0 + l)).ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = xs.iter().map(|a| (a - mx) * (a - mx)).sum();
    assert!((slope - sxy / sxx).abs() <= 1e-9, "{slope} vs {}", sxy / sxx);
    assert!(slope < -0.9);
}

#[test]
fn degenerate_grid_at_the_origin_has_zero_ratios() {
    let grid = LemmaGrid {
        lambdas: (1..=10).map(|p| 2f64.powi(p)).collect(),
        xs: vec![vec![0.0]],
    };
    let report = verify_lemma_bounds(&sq2(), &grid).unwrap();
    for c in &report.checks {
        assert!(c.pass, "{}", c.name);
        assert_eq!(c.max_ratio, 0.0, "{}", c.name);
    }
}

#[test]
fn inflated_modulus_breaks_the_minimizer_gap_bound() {
    let oracle = sq2();
    let c = *oracle.constants();
    let inflated = oracle
        .with_constants(SmoothnessConstants {
            mu_g: c.mu_g * 10.0,
            ..c
        })
        .unwrap();
    let report = verify_lemma_bounds(&inflated, &LemmaGrid::scalar(-1.0, 1.0)).unwrap();
    let gap = report.get("minimizer_gap").unwrap();
    assert!(!gap.pass, "{}", gap.max_ratio);
}

#[test]
fn lagrangian_is_strongly_convex_from_the_threshold_up() {
    for (entry, oracle) in quadratic_catalog() {
        let t = oracle.lambda_threshold();
        let check = check_lagrangian_strong_convexity(&oracle, &[t, 2.0 * t, 10.0 * t, 1e4 * t]);
        assert!(check.pass, "{}: {}", entry.name, check.max_ratio);
    }
}

#[test]
fn catalog_grids_respect_the_bounds() {
    for (entry, oracle) in quadratic_catalog() {
        let (lo, hi) = match entry.problem.x_domain() {
            Some(d) => (d.lower()[0], d.upper()[0]),
            None => (-1.0, 1.0),
        };
        let report = verify_lemma_bounds(&oracle, &LemmaGrid::scalar(lo, hi)).unwrap();
        for c in &report.checks {
            println!("{} {} {:.3e}", entry.name, c.name, c.max_ratio);
        }
        assert!(report.all_pass(), "{}", entry.name);
    }
}
