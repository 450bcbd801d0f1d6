//! Budget-matched optimizers over the relaxed unit cube.
//!
//! Every method maximizes a reward through the [`Objective`] trait, which
//! refuses evaluations once the budget is spent. The [`runner`] binds an
//! objective to a [`ProblemEnvironment`](crate::problems::ProblemEnvironment),
//! records the trajectory and writes run artifacts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod bo;
pub mod cmaes;
pub mod evolve;
pub mod fd;
pub mod gp;
pub mod lbfgsb;
pub mod pso;
pub mod runner;

pub use bo::BoSettings;
pub use cmaes::CmaesSettings;
pub use evolve::EvolveSettings;
pub use fd::{fd_gradient, FdError, FD_EPS};
pub use lbfgsb::LbfgsbSettings;
pub use pso::{pso_coefficients, PsoSettings};
pub use runner::{read_results, run_pool, run_with_budget, run_with_options, EvalRecord, RunError, RunOptions, Trajectory};

/// The budget is spent; no further evaluations are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("evaluation budget exhausted")]
pub struct Exhausted;

/// A reward to maximize over `[0, 1]^dim` under an evaluation budget.
pub trait Objective {
    fn dim(&self) -> usize;

    /// Evaluations still allowed.
    fn remaining(&self) -> usize;

    /// Reward at `z`, or [`Exhausted`] without evaluating. A failed
    /// evaluation reports `f64::NEG_INFINITY`.
    fn evaluate(&mut self, z: &[f64]) -> Result<f64, Exhausted>;
}

/// A closure under a budget. Handy for tests and for callers that do not
/// need an environment.
pub struct FnObjective<F> {
    f: F,
    dim: usize,
    budget: usize,
    used: usize,
}

impl<F: FnMut(&[f64]) -> f64> FnObjective<F> {
    pub fn new(dim: usize, budget: usize, f: F) -> Self {
        Self { f, dim, budget, used: 0 }
    }

    pub fn used(&self) -> usize {
        self.used
    }
}

impl<F: FnMut(&[f64]) -> f64> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn remaining(&self) -> usize {
        self.budget - self.used
    }

    fn evaluate(&mut self, z: &[f64]) -> Result<f64, Exhausted> {
        if self.used >= self.budget {
            return Err(Exhausted);
        }
        self.used += 1;
        let r = (self.f)(z);
        Ok(if r.is_nan() { f64::NEG_INFINITY } else { r })
    }
}

/// A point already evaluated before the method starts (warm starts).
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub z: Vec<f64>,
    pub reward: f64,
}

/// Side information a method reports besides its evaluations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MethodReport {
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lbfgsb,
    Pso,
    Cmaes,
    Bo,
    Evolve,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Lbfgsb, Method::Pso, Method::Cmaes, Method::Bo, Method::Evolve];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lbfgsb => "lbfgsb",
            Method::Pso => "pso",
            Method::Cmaes => "cmaes",
            Method::Bo => "bo",
            Method::Evolve => "evolve",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown method `{s}` (expected one of lbfgsb, pso, cmaes, bo, evolve)"))
    }
}

/// Method-specific settings, tagged by method name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum MethodSettings {
    Lbfgsb(LbfgsbSettings),
    Pso(PsoSettings),
    Cmaes(CmaesSettings),
    Bo(BoSettings),
    Evolve(EvolveSettings),
}

impl MethodSettings {
    pub fn defaults(method: Method) -> Self {
        match method {
            Method::Lbfgsb => Self::Lbfgsb(LbfgsbSettings::default()),
            Method::Pso => Self::Pso(PsoSettings::default()),
            Method::Cmaes => Self::Cmaes(CmaesSettings::default()),
            Method::Bo => Self::Bo(BoSettings::default()),
            Method::Evolve => Self::Evolve(EvolveSettings::default()),
        }
    }

    pub fn method(&self) -> Method {
        match self {
            Self::Lbfgsb(_) => Method::Lbfgsb,
            Self::Pso(_) => Method::Pso,
            Self::Cmaes(_) => Method::Cmaes,
            Self::Bo(_) => Method::Bo,
            Self::Evolve(_) => Method::Evolve,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        match self {
            Self::Lbfgsb(s) => s.check(),
            Self::Pso(s) => s.check(),
            Self::Cmaes(s) => s.check(),
            Self::Bo(s) => s.check(),
            Self::Evolve(s) => s.check(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    #[serde(flatten)]
    pub settings: MethodSettings,
    /// Evaluation budget (`n_calls`), warm starts included.
    pub budget: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warmstart: Vec<crate::space::DesignPoint>,
}

impl OptimizerConfig {
    pub fn new(method: Method, budget: usize, seed: u64) -> Self {
        Self { settings: MethodSettings::defaults(method), budget, seed, warmstart: Vec::new() }
    }

    pub fn with_settings(mut self, settings: MethodSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn with_warmstart(mut self, points: Vec<crate::space::DesignPoint>) -> Self {
        self.warmstart = points;
        self
    }

    pub fn method(&self) -> Method {
        self.settings.method()
    }

    pub fn check(&self) -> Result<(), String> {
        if self.budget == 0 {
            return Err("budget must be at least 1".into());
        }
        if self.warmstart.len() > self.budget {
            return Err(format!("{} warm-start points exceed the budget of {}", self.warmstart.len(), self.budget));
        }
        self.settings.check()
    }
}

/// Index of the largest value; NaN sorts lowest, first index wins ties.
pub(crate) fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        if best.is_none_or(|b| *v > values[b]) {
            best = Some(i);
        }
    }
    best
}

pub(crate) fn clamp_unit(z: &mut [f64]) {
    for c in z {
        *c = c.clamp(0.0, 1.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fn_objective_enforces_budget() {
        let mut o = FnObjective::new(2, 3, |z: &[f64]| z[0]);
        for _ in 0..3 {
            o.evaluate(&[0.5, 0.5]).unwrap();
        }
        assert_eq!(o.evaluate(&[0.5, 0.5]), Err(Exhausted));
        assert_eq!(o.used(), 3);
        assert_eq!(o.remaining(), 0);
    }

    #[test]
    fn config_round_trips_and_checks() {
        for m in Method::ALL {
            let c = OptimizerConfig::new(m, 100, 4);
            c.check().unwrap();
            let text = serde_json::to_string(&c).unwrap();
            assert!(text.contains(&format!("\"method\":\"{m}\"")));
            assert_eq!(serde_json::from_str::<OptimizerConfig>(&text).unwrap(), c);
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!(OptimizerConfig::new(Method::Pso, 0, 1).check().is_err());
        assert!("simplex".parse::<Method>().is_err());
    }

    #[test]
    fn argmax_skips_nan_and_prefers_first() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), Some(1));
        assert_eq!(argmax(&[f64::NAN, f64::NEG_INFINITY]), Some(1));
        assert_eq!(argmax(&[]), None);
    }
}
