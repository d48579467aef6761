mod common;

use common::{builtin, cli, fixtures};
use stackelberg_cli::commands::VerifyReport;

fn report(args: &[&str]) -> (i32, VerifyReport) {
    let r = builtin(args);
    assert!(r.code == 0 || r.code == 3, "{}", r.stderr);
    (r.code, serde_json::from_str(&r.stdout).unwrap())
}

#[test]
fn sq2_passes_every_check() {
    let (code, rep) = report(&["verify", "--problem", "sq2"]);
    assert_eq!(code, 0);
    assert!(rep.pass);
    let names: Vec<&str> = rep.checks.iter().map(|c| c.name.as_str()).collect();
    for want in [
        "minimizer_gap",
        "hypergradient_gap",
        "three_term_gradient_bound",
        "minimizer_sensitivity",
        "lagrangian_strong_convexity",
        "descent",
        "error_decomposition",
        "leader_step",
        "inner_triangle",
        "horizon",
    ] {
        assert!(names.contains(&want), "missing {want} in {names:?}");
    }
    assert!(rep.checks.iter().all(|c| c.evaluated > 0));
    assert_eq!(rep.solve_status.as_deref(), Some("converged"));
    assert!(rep.gap_decay_slope.unwrap() < -0.9);
}

#[test]
fn inflated_modulus_fails_with_exit_three() {
    let (code, rep) = report(&["verify", "--problem", "sq2", "constants.mu_g=10"]);
    assert_eq!(code, 3);
    assert!(!rep.pass);
    let gap = rep.checks.iter().find(|c| c.name == "minimizer_gap").unwrap();
    assert!(!gap.pass);
    assert!(rep
        .checks
        .iter()
        .any(|c| c.name.starts_with("declared_constants") && !c.pass));
}

#[test]
fn cournot_passes_the_check_suite() {
    for name in ["cournot-a", "cournot-b"] {
        let (code, rep) = report(&["verify", "--problem", name]);
        assert_eq!(
            code,
            0,
            "{name}: {:?}",
            rep.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>()
        );
    }
}

#[test]
fn disabled_checks_are_skipped() {
    let (code, rep) = report(&[
        "verify",
        "--problem",
        "coupled-0.5",
        "checks.descent=false",
        "checks.error_decomposition=false",
        "checks.leader_step=false",
        "checks.inner_triangle=false",
        "checks.horizon=false",
    ]);
    assert_eq!(code, 0);
    assert!(rep.solve_status.is_none());
    assert_eq!(rep.checks.len(), 5);
}

#[test]
fn report_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let r = builtin(&["verify", "--problem", "sq2", "--out", path.to_str().unwrap()]);
    let printed: VerifyReport = serde_json::from_str(&r.stdout).unwrap();
    let written: VerifyReport = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(printed, written);
}

#[test]
fn non_quadratic_problem_has_no_oracle() {
    let r = cli(&fixtures(), &["verify", "--problem", "sine"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("oracle unavailable"), "{}", r.stderr);
}
