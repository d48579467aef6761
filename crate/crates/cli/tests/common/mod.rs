#![allow(dead_code)]

use std::sync::Arc;

use stackelberg_cli::{run_cli, Registry};
use stackelberg_core::model::{FollowerCost, LeaderObjective};
use stackelberg_core::{BlockLayout, BoxDomain, CatalogEntry, Constants, JointPoint, Problem};

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn cli(registry: &Registry, args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("stackelberg").chain(args.iter().copied());
    let code = run_cli(argv, registry, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

pub fn builtin(args: &[&str]) -> Run {
    cli(&Registry::builtin(), args)
}

/// `f = ½(x−1)² + ½‖y‖² + 0.1 sin x`, followers `g_i = ½y_i² − ½x y_i`.
/// Smooth and strongly monotone but not quadratic. `scale` multiplies the
/// reported leader x-gradient so it can be corrupted on purpose.
struct SineLeader {
    scale: f64,
}

impl LeaderObjective<f64> for SineLeader {
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        0.5 * (x[0] - 1.0).powi(2) + 0.5 * y.iter().map(|v| v * v).sum::<f64>() + 0.1 * x[0].sin()
    }
    fn grad_x(&self, x: &[f64], _y: &[f64]) -> Vec<f64> {
        vec![self.scale * (x[0] - 1.0 + 0.1 * x[0].cos())]
    }
    fn grad_y(&self, _x: &[f64], y: &[f64]) -> Vec<f64> {
        y.to_vec()
    }
}

struct ConstantLeader;

impl LeaderObjective<f64> for ConstantLeader {
    fn value(&self, _x: &[f64], _y: &[f64]) -> f64 {
        4.0
    }
    fn grad_x(&self, x: &[f64], _y: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }
    fn grad_y(&self, _x: &[f64], y: &[f64]) -> Vec<f64> {
        vec![0.0; y.len()]
    }
}

struct Tracker {
    i: usize,
}

impl FollowerCost<f64> for Tracker {
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        0.5 * y[self.i] * y[self.i] - 0.5 * x[0] * y[self.i]
    }
    fn grad_x(&self, _x: &[f64], y: &[f64]) -> Vec<f64> {
        vec![-0.5 * y[self.i]]
    }
    fn grad_own(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        vec![y[self.i] - 0.5 * x[0]]
    }
}

fn entry(name: &str, leader: Arc<dyn LeaderObjective<f64>>) -> CatalogEntry {
    let constants = Constants {
        mu_g: 1.0,
        ell_f0: 4.0,
        ell_f1: 1.5,
        ell_g0: 1.5,
        ell_g1: 1.5,
        ell_g2: 0.0,
    };
    let followers: Vec<Arc<dyn FollowerCost<f64>>> = (0..2).map(|i| Arc::new(Tracker { i }) as _).collect();
    let problem = Problem::new(name, leader, followers, BlockLayout::scalar(2).unwrap(), constants)
        .unwrap()
        .with_domains(
            Some(BoxDomain::uniform(1, -2.0, 2.0).unwrap()),
            Some(BoxDomain::uniform(2, -2.0, 2.0).unwrap()),
        )
        .unwrap();
    CatalogEntry {
        name: name.into(),
        params: String::new(),
        problem,
        spec: None,
        initial: JointPoint::new(vec![1.5], vec![0.0, 0.0]),
    }
}

pub fn sine_entry() -> CatalogEntry {
    entry("sine", Arc::new(SineLeader { scale: 1.0 }))
}

pub fn corrupted_entry() -> CatalogEntry {
    entry("corrupted", Arc::new(SineLeader { scale: 2.0 }))
}

pub fn constant_entry() -> CatalogEntry {
    entry("constant", Arc::new(ConstantLeader))
}

pub fn fixtures() -> Registry {
    Registry::builtin()
        .with_entry(sine_entry())
        .with_entry(corrupted_entry())
        .with_entry(constant_entry())
}

/// Drops the `# created:` line.
pub fn without_timestamp(text: &str) -> &str {
    text.split_once('\n').unwrap().1
}
