//! Run configuration: a TOML file with `[problem]`, `[constants]`, `[schedule]`,
//! `[output]` and `[checks]` sections plus a top-level `seed`. Unknown keys are
//! rejected. Dotted `section.key=value` overrides are applied on top.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stackelberg_core::{Constants, Schedule};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub problem: ProblemConfig,
    pub constants: ConstantsConfig,
    pub schedule: ScheduleConfig,
    pub output: OutputConfig,
    pub checks: ChecksConfig,
}

/// Problem name plus optional builder arguments. Which arguments apply depends
/// on the family: `k`, `coupling`, `shift` for the symmetric quadratics and
/// `k`, `intercept`, `slope`, `costs`, `tax_weight`, `target`, `tax_cap` for Cournot.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intercept: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub costs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tax_weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tax_cap: Option<f64>,
}

impl ProblemConfig {
    pub(crate) fn quadratic_args(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.coupling.is_some() {
            v.push("coupling");
        }
        if self.shift.is_some() {
            v.push("shift");
        }
        v
    }

    pub(crate) fn cournot_args(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        for (name, set) in [
            ("intercept", self.intercept.is_some()),
            ("slope", self.slope.is_some()),
            ("costs", self.costs.is_some()),
            ("tax_weight", self.tax_weight.is_some()),
            ("target", self.target.is_some()),
            ("tax_cap", self.tax_cap.is_some()),
        ] {
            if set {
                v.push(name);
            }
        }
        v
    }
}

/// Replacements for the declared smoothness constants.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell_f0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell_g0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell_g1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell_g2: Option<f64>,
}

impl ConstantsConfig {
    pub fn apply(&self, base: &Constants) -> Constants {
        Constants {
            mu_g: self.mu_g.unwrap_or(base.mu_g),
            ell_f0: self.ell_f0.unwrap_or(base.ell_f0),
            ell_f1: self.ell_f1.unwrap_or(base.ell_f1),
            ell_g0: self.ell_g0.unwrap_or(base.ell_g0),
            ell_g1: self.ell_g1.unwrap_or(base.ell_g1),
            ell_g2: self.ell_g2.unwrap_or(base.ell_g2),
        }
    }

    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub rho: f64,
    pub eps_prime: f64,
    pub target_eps: f64,
    pub t_max: usize,
    pub lambda_cap: f64,
    pub c_y: f64,
    pub c_z: f64,
    /// Leader step; defaults to `1/ℓ_F1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Defaults to `max(1, 2ℓ_f1/μ_g)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_floor: Option<f64>,
    /// The monotone-solver constant `C_z`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_const: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_tol: Option<f64>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        let p = Schedule::new(1.5, 0.1, 1e-2);
        Self {
            rho: p.rho,
            eps_prime: p.eps_prime,
            target_eps: p.target_eps,
            t_max: p.t_max,
            lambda_cap: p.lambda_cap,
            c_y: p.c_y,
            c_z: p.c_z,
            eta: None,
            lambda_floor: None,
            c_const: None,
            y_tol: None,
            z_tol: None,
        }
    }
}

impl ScheduleConfig {
    pub fn to_params(&self) -> Result<Schedule, CliError> {
        let mut p = Schedule::new(self.rho, self.eps_prime, self.target_eps);
        p.t_max = self.t_max;
        p.lambda_cap = self.lambda_cap;
        p.c_y = self.c_y;
        p.c_z = self.c_z;
        p.eta = self.eta;
        p.lambda_floor = self.lambda_floor;
        p.c_const = self.c_const;
        if let Some(t) = self.y_tol {
            p.y_tol = t;
        }
        if let Some(t) = self.z_tol {
            p.z_tol = t;
        }
        p.validate().map_err(|e| CliError::Config(format!("schedule: {e}")))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// CSV trace written by `solve` and `verify`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    /// JSON summary of `solve`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
    /// JSON report of `verify` and `gradcheck`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

/// Which oracle-backed checks `verify` runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksConfig {
    pub lemmas: bool,
    pub strong_convexity: bool,
    pub descent: bool,
    pub error_decomposition: bool,
    pub leader_step: bool,
    pub inner_triangle: bool,
    pub horizon: bool,
    /// Random points per oracle in `gradcheck`.
    pub gradcheck_samples: usize,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        Self {
            lemmas: true,
            strong_convexity: true,
            descent: true,
            error_decomposition: true,
            leader_step: true,
            inner_triangle: true,
            horizon: true,
            gradcheck_samples: 50,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text.parse().map_err(|e| CliError::Config(format!("{e}")))?;
        Self::from_table(table)
    }

    pub fn from_table(table: toml::Table) -> Result<Self, CliError> {
        serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." || path.is_empty() {
                CliError::Config(inner.to_string())
            } else {
                CliError::Config(format!("`{path}`: {inner}"))
            }
        })
    }

    /// Reads `path` (if any), then applies `overrides` in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        Self::from_table(table)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }
}

/// Sets `a.b.c=value` in `table`. The value is read as a TOML literal and
/// falls back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("override key `{key}` is malformed")));
    }
    let value = parse_literal(raw.trim());
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    let mut current = table;
    for p in parents {
        let entry = current
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        current = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(CliError::Config(format!("override `{key}`: `{p}` is not a section"))),
        };
    }
    current.insert(last.to_string(), value);
    Ok(())
}

fn parse_literal(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
