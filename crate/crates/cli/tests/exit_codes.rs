mod common;

use common::{builtin, cli, fixtures};
use stackelberg_cli::commands::SolveSummary;

#[test]
fn converged_solve_exits_zero_and_writes_both_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let summary = dir.path().join("s.json");
    let r = builtin(&[
        "solve",
        "--problem",
        "sq2",
        "--out",
        trace.to_str().unwrap(),
        &format!("output.summary={:?}", summary.to_str().unwrap()),
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let printed: SolveSummary = serde_json::from_str(&r.stdout).unwrap();
    let written: SolveSummary = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(printed, written);
    assert_eq!(printed.status, "converged");
    assert_eq!(printed.gradient_source, "true");
    assert!(printed.best_grad_norm.unwrap() <= 1e-2);
    let rows = stackelberg_cli::Trace::read(&trace).unwrap().rows;
    assert_eq!(rows.len(), printed.outer_iterations);
    assert_eq!(rows.last().unwrap().grad_evals_cum, printed.total_grad_evals);
}

#[test]
fn exhausted_horizon_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let r = builtin(&[
        "solve",
        "--problem",
        "sq2",
        "--out",
        trace.to_str().unwrap(),
        "schedule.t_max=1",
    ]);
    assert_eq!(r.code, 2, "{}", r.stderr);
    assert!(r.stdout.contains("budget_exhausted"));
}

#[test]
fn missing_problem_exits_one() {
    let r = builtin(&["solve"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("problem.name"), "{}", r.stderr);
}

#[test]
fn unknown_config_key_exits_one_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[schedule]\nrho = 1.5\nroh = 2.0\n").unwrap();
    let r = builtin(&["solve", "--problem", "sq2", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("schedule.roh"), "{}", r.stderr);

    let r = builtin(&["verify", "--problem", "sq2", "checks.descnet=false"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("descnet"), "{}", r.stderr);
}

#[test]
fn unknown_problem_and_bad_flags_exit_one() {
    assert_eq!(builtin(&["solve", "--problem", "nope"]).code, 1);
    assert_eq!(builtin(&["solve", "--bogus"]).code, 1);
    assert_eq!(builtin(&["frobnicate"]).code, 1);
    assert_eq!(builtin(&["--help"]).code, 0);
}

#[test]
fn registered_non_quadratic_problem_solves_on_surrogate_gradients() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let r = cli(
        &fixtures(),
        &["solve", "--problem", "sine", "--out", trace.to_str().unwrap()],
    );
    assert!(r.code == 0 || r.code == 2, "{}", r.stderr);
    let s: SolveSummary = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(s.gradient_source, "surrogate");
    let rows = stackelberg_cli::Trace::read(&trace).unwrap().rows;
    assert!(rows.iter().all(|r| r.true_grad_norm.is_none()));
}

#[test]
fn installed_binary_reports_the_same_codes() {
    let bin = env!("CARGO_BIN_EXE_stackelberg");
    let dir = tempfile::tempdir().unwrap();
    let status = |args: &[&str]| {
        std::process::Command::new(bin)
            .args(args)
            .current_dir(dir.path())
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(status(&["solve", "--problem", "sq2"]), Some(0));
    assert!(dir.path().join("trace.csv").exists());
    assert_eq!(status(&["solve", "--problem", "sq2", "schedule.t_max=1"]), Some(2));
    assert_eq!(status(&["solve"]), Some(1));
    assert_eq!(status(&["verify", "--problem", "sq2", "constants.mu_g=10"]), Some(3));
}
