//! Name → problem resolution, including builder overrides and user-registered
//! instances.

use stackelberg_core::problems::{self, make_cournot, make_symmetric_quadratic, CournotParams};
use stackelberg_core::{CatalogEntry, QuadraticOracle};

use crate::config::{ConstantsConfig, ProblemConfig};
use crate::error::CliError;

/// Built-in catalog plus any extra entries registered by an embedding program.
/// Extra entries need not be quadratic; the solver runs on them but checks that
/// need the exact oracle are refused.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    extra: Vec<CatalogEntry>,
}

/// A resolved problem with constant overrides applied.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub entry: CatalogEntry,
    /// Exact oracle carrying the (possibly overridden) declared constants.
    pub oracle: Option<QuadraticOracle>,
    /// Set when the overridden constants break an invariant the solver needs.
    pub invalid_constants: Option<String>,
}

#[derive(Debug, Clone, Copy)]
enum Family {
    Symmetric { coupling: f64 },
    Cournot,
}

fn symmetric_defaults(name: &str) -> Option<f64> {
    match name {
        "sq2" | "symmetric" => Some(0.0),
        "coupled-0.25" => Some(0.25),
        "coupled-0.5" => Some(0.5),
        "coupled-0.75" => Some(0.75),
        _ => None,
    }
}

fn cournot_defaults(name: &str) -> Option<CournotParams> {
    match name {
        "cournot" | "cournot-a" => Some(CournotParams {
            k: 2,
            intercept: 10.0,
            slope: 1.0,
            costs: vec![1.0, 1.0],
            tax_weight: 0.0,
            target: 0.0,
            tax_cap: None,
        }),
        "cournot-b" => Some(CournotParams {
            k: 3,
            intercept: 12.0,
            slope: 2.0,
            costs: vec![1.0, 2.0, 3.0],
            tax_weight: 0.5,
            target: 1.0,
            tax_cap: Some(5.0),
        }),
        _ => None,
    }
}

impl Registry {
    pub fn builtin() -> Self {
        Self::default()
    }

    /// Makes `entry` addressable by its name. Extra entries shadow built-ins.
    pub fn with_entry(mut self, entry: CatalogEntry) -> Self {
        self.extra.push(entry);
        self
    }

    /// Every addressable name: the catalog, the parameterized families
    /// `symmetric` and `cournot`, and registered extras.
    pub fn names(&self) -> Vec<String> {
        let mut v: Vec<String> = problems::CATALOG_NAMES.iter().map(|s| s.to_string()).collect();
        v.push("symmetric".into());
        v.push("cournot".into());
        v.extend(self.extra.iter().map(|e| e.name.clone()));
        v
    }

    pub fn resolve(&self, cfg: &ProblemConfig, constants: &ConstantsConfig) -> Result<Resolved, CliError> {
        let name = cfg
            .name
            .as_deref()
            .ok_or_else(|| CliError::Config("`problem.name` is required (or pass --problem)".into()))?;
        let entry = self.build(name, cfg)?;
        let declared = constants.apply(entry.problem.constants());
        let mut invalid = None;
        let entry = if constants.is_empty() {
            entry
        } else {
            match entry.problem.clone().with_constants(declared) {
                Ok(problem) => CatalogEntry { problem, ..entry },
                Err(e) => {
                    invalid = Some(e.to_string());
                    entry
                }
            }
        };
        let oracle = match entry.oracle() {
            Some(o) => Some(o?.with_constants(declared)?),
            None => None,
        };
        Ok(Resolved {
            entry,
            oracle,
            invalid_constants: invalid,
        })
    }

    fn build(&self, name: &str, cfg: &ProblemConfig) -> Result<CatalogEntry, CliError> {
        if let Some(e) = self.extra.iter().find(|e| e.name == name) {
            let args: Vec<_> = cfg.quadratic_args().into_iter().chain(cfg.cournot_args()).collect();
            if !args.is_empty() || cfg.k.is_some() {
                return Err(CliError::Config(format!("problem '{name}' takes no builder arguments")));
            }
            return Ok(e.clone());
        }
        let family = if let Some(coupling) = symmetric_defaults(name) {
            Family::Symmetric { coupling }
        } else if cournot_defaults(name).is_some() {
            Family::Cournot
        } else {
            return Err(CliError::Config(format!(
                "unknown problem '{name}' in `problem.name`; known: {}",
                self.names().join(", ")
            )));
        };
        match family {
            Family::Symmetric { coupling } => {
                if let Some(arg) = cfg.cournot_args().first() {
                    return Err(CliError::Config(format!("`problem.{arg}` does not apply to '{name}'")));
                }
                let has_args = cfg.k.is_some() || !cfg.quadratic_args().is_empty();
                if !has_args && name != "symmetric" {
                    return Ok(problems::by_name(name)?);
                }
                let k = cfg.k.unwrap_or(2);
                let c = cfg.coupling.unwrap_or(coupling);
                let shift = cfg.shift.clone().unwrap_or_else(|| vec![0.0]);
                let entry = make_symmetric_quadratic(k, c, &shift)?;
                entry.validate()?;
                Ok(entry)
            }
            Family::Cournot => {
                if let Some(arg) = cfg.quadratic_args().first() {
                    return Err(CliError::Config(format!("`problem.{arg}` does not apply to '{name}'")));
                }
                let has_args = cfg.k.is_some() || !cfg.cournot_args().is_empty();
                if !has_args && name != "cournot" {
                    return Ok(problems::by_name(name)?);
                }
                let mut p = cournot_defaults(name).expect("family checked above");
                if let Some(k) = cfg.k {
                    if k != p.k && cfg.costs.is_none() {
                        p.costs = vec![p.costs[0]; k];
                    }
                    p.k = k;
                }
                p.intercept = cfg.intercept.unwrap_or(p.intercept);
                p.slope = cfg.slope.unwrap_or(p.slope);
                p.costs = cfg.costs.clone().unwrap_or(p.costs);
                p.tax_weight = cfg.tax_weight.unwrap_or(p.tax_weight);
                p.target = cfg.target.unwrap_or(p.target);
                p.tax_cap = cfg.tax_cap.or(p.tax_cap);
                let mut entry = make_cournot(&p)?;
                entry.validate()?;
                if name != "cournot" && has_args {
                    entry.name = format!("{name}-custom");
                }
                Ok(entry)
            }
        }
    }
}
