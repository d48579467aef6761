//! Argument parsing and dispatch, shared by the binary and the tests.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, DEFAULT_RATE_SLACK};
use crate::config::RunConfig;
use crate::error::{CliError, EXIT_ERROR, EXIT_OK};
use crate::registry::Registry;

#[derive(Debug, Parser)]
#[command(
    name = "stackelberg",
    version,
    about = "First-order solver and verification harness for Stackelberg games"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the solver and write a CSV trace plus a JSON summary.
    Solve(RunArgs),
    /// Check the bound lemmas and a fresh solve trace against the exact oracle.
    Verify(RunArgs),
    /// Compare every analytic gradient with finite differences.
    Gradcheck(RunArgs),
    /// Fit the empirical rate of one or more traces.
    Ratefit(RateArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Problem name, same as `problem.name=...`.
    #[arg(long)]
    pub problem: Option<String>,
    /// Output path: the trace for `solve`, the JSON report for `verify` and `gradcheck`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// RNG seed. TOML integers are signed, so at most 2^63 − 1.
    #[arg(long, value_parser = clap::value_parser!(u64).range(0..=i64::MAX as u64))]
    pub seed: Option<u64>,
    /// Dotted overrides such as `schedule.rho=1.5`.
    #[arg(value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    /// Trace CSV files.
    #[arg(required = true)]
    pub traces: Vec<PathBuf>,
    /// Allowance above the theoretical exponent.
    #[arg(long, default_value_t = DEFAULT_RATE_SLACK)]
    pub slack: f64,
    /// Write the JSON result here as well.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Solve,
    Verify,
    Gradcheck,
}

fn load(args: &RunArgs, kind: Kind) -> Result<RunConfig, CliError> {
    let mut overrides = Vec::new();
    if let Some(p) = &args.problem {
        overrides.push(format!("problem.name={}", toml::Value::String(p.clone())));
    }
    if let Some(s) = args.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(out) = &args.out {
        let key = match kind {
            Kind::Solve => "output.trace",
            Kind::Verify | Kind::Gradcheck => "output.report",
        };
        overrides.push(format!("{key}={}", toml::Value::String(out.display().to_string())));
    }
    overrides.extend(args.overrides.iter().cloned());
    RunConfig::load(args.config.as_deref(), &overrides)
}

fn json_line<T: serde::Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)?;
    writeln!(out, "{text}").map_err(|e| CliError::io(std::path::Path::new("<stdout>"), e))
}

fn dispatch(cli: Cli, registry: &Registry, out: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Solve(args) => {
            let mut cfg = load(&args, Kind::Solve)?;
            if cfg.output.trace.is_none() {
                cfg.output.trace = Some(PathBuf::from("trace.csv"));
            }
            let run = commands::solve(&cfg, registry)?;
            json_line(out, &run.summary)?;
            Ok(run.exit_code)
        }
        Command::Verify(args) => {
            let cfg = load(&args, Kind::Verify)?;
            let (code, report) = commands::verify(&cfg, registry)?;
            json_line(out, &report)?;
            Ok(code)
        }
        Command::Gradcheck(args) => {
            let cfg = load(&args, Kind::Gradcheck)?;
            let (code, report) = commands::gradcheck(&cfg, registry)?;
            for l in &report.oracles {
                let verdict = if l.pass { "ok" } else { "FAIL" };
                writeln!(out, "{:<24} {:.3e} {verdict}", l.oracle, l.worst_rel_error)
                    .map_err(|e| CliError::io(std::path::Path::new("<stdout>"), e))?;
            }
            Ok(code)
        }
        Command::Ratefit(args) => {
            let (code, fits) = commands::ratefit(&args.traces, args.slack)?;
            json_line(out, &fits)?;
            if let Some(path) = &args.out {
                let text = serde_json::to_string_pretty(&fits)? + "\n";
                std::fs::write(path, text).map_err(|e| CliError::io(path, e))?;
            }
            Ok(code)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Results go to `out`, diagnostics to `err`.
pub fn run_cli<I, S>(args: I, registry: &Registry, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = if code == EXIT_OK {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    match dispatch(cli, registry, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
