//! Budgeted runs against a problem environment.
//!
//! A run evaluates any warm-start designs first, then hands the remaining
//! budget to the method. Every evaluation is recorded, failed ones
//! included (reward `-inf`, infeasible). With an output directory set, the
//! resolved configuration is written before the first evaluation and
//! `results.csv` grows one flushed row per evaluation, so an interrupted
//! run leaves a readable prefix.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::{bo, cmaes, evolve, lbfgsb, pso};
use super::{Exhausted, Method, MethodReport, MethodSettings, Objective, Observation, OptimizerConfig};
use crate::problems::catalog::CATALOG_VERSION;
use crate::problems::pareto::pareto_front;
use crate::problems::{ProblemEnvironment, Sense};
use crate::rng::RNG_ALGORITHM;
use crate::space::{DesignPoint, VarKind};

pub const RESULTS_HEADER: &str = "iter,design_id,reward,best_reward,feasible,n_evals,wall_ms";
pub const HARNESS_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub catalog_version: String,
    /// Record elapsed milliseconds per evaluation. Off by default so that
    /// repeated runs produce identical files.
    pub wall_clock: bool,
    /// Directory receiving the run artifacts, written as the run proceeds.
    pub out_dir: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { catalog_version: CATALOG_VERSION.into(), wall_clock: false, out_dir: None }
    }
}

/// One row of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub iter: usize,
    pub design_id: String,
    pub reward: f64,
    pub best_reward: f64,
    pub feasible: bool,
    pub n_evals: u64,
    pub wall_ms: u64,
}

impl EvalRecord {
    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.iter, self.design_id, self.reward, self.best_reward, self.feasible, self.n_evals, self.wall_ms
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestDesign {
    pub iter: usize,
    pub design_id: String,
    pub reward: f64,
    pub feasible: bool,
    pub design: DesignPoint,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalFailure {
    pub iter: usize,
    pub design_id: String,
    pub error: String,
}

/// Objective values of one evaluation of a multi-objective task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePoint {
    pub iter: usize,
    pub design_id: String,
    pub objectives: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub task: String,
    pub method: Method,
    pub seed: u64,
    pub budget: usize,
    pub records: Vec<EvalRecord>,
    pub best: Option<BestDesign>,
    pub failures: Vec<EvalFailure>,
    pub warnings: Vec<String>,
    /// Per-evaluation objective values, kept for multi-objective tasks.
    pub objective_points: Vec<ObjectivePoint>,
    pub resolved_config: Value,
}

impl Trajectory {
    pub fn rewards(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.reward).collect()
    }

    pub fn best_reward(&self) -> Option<f64> {
        self.records.last().map(|r| r.best_reward)
    }

    pub fn results_csv(&self) -> String {
        let mut out = String::from(RESULTS_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }

    /// Indices into `objective_points` of the non-dominated evaluations.
    pub fn pareto_indices(&self, senses: &[(String, Sense)]) -> Vec<usize> {
        let pts: Vec<(usize, Vec<f64>)> = self
            .objective_points
            .iter()
            .enumerate()
            .filter_map(|(i, p)| {
                senses.iter().map(|(label, _)| p.objectives.get(label).copied()).collect::<Option<Vec<_>>>().map(|v| (i, v))
            })
            .collect();
        let values: Vec<Vec<f64>> = pts.iter().map(|(_, v)| v.clone()).collect();
        let s: Vec<Sense> = senses.iter().map(|(_, s)| *s).collect();
        pareto_front(&values, &s).map(|f| f.into_iter().map(|k| pts[k].0).collect()).unwrap_or_default()
    }

    /// Writes every artifact into `dir`, replacing existing files.
    pub fn write_dir(&self, dir: &Path) -> Result<(), RunError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        write_json(&dir.join("resolved_config.json"), &self.resolved_config)?;
        let csv = dir.join("results.csv");
        fs::write(&csv, self.results_csv()).map_err(io_err(&csv))?;
        self.write_tail(dir)
    }

    fn write_tail(&self, dir: &Path) -> Result<(), RunError> {
        if let Some(best) = &self.best {
            write_json(&dir.join("best_design.json"), &serde_json::to_value(best).expect("serializable"))?;
        }
        if !self.failures.is_empty() {
            let path = dir.join("errors.jsonl");
            let mut text = String::new();
            for f in &self.failures {
                text.push_str(&serde_json::to_string(f).expect("serializable"));
                text.push('\n');
            }
            fs::write(&path, text).map_err(io_err(&path))?;
        }
        if !self.objective_points.is_empty() {
            write_json(&dir.join("objectives.json"), &serde_json::to_value(&self.objective_points).expect("serializable"))?;
        }
        if !self.warnings.is_empty() {
            let path = dir.join("warnings.txt");
            fs::write(&path, self.warnings.join("\n") + "\n").map_err(io_err(&path))?;
        }
        Ok(())
    }
}

fn write_json(path: &Path, value: &Value) -> Result<(), RunError> {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    fs::write(path, text).map_err(io_err(path))
}

/// Reads the rows of a `results.csv`.
pub fn read_results(path: &Path) -> Result<Vec<EvalRecord>, RunError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| RunError::Parse { path: path.into(), message: e.to_string() })?;
    let header = reader.headers().map_err(|e| RunError::Parse { path: path.into(), message: e.to_string() })?;
    if header.iter().collect::<Vec<_>>().join(",") != RESULTS_HEADER {
        return Err(RunError::Parse { path: path.into(), message: "unexpected header".into() });
    }
    reader
        .deserialize()
        .map(|r| r.map_err(|e| RunError::Parse { path: path.into(), message: e.to_string() }))
        .collect()
}

/// The method-specific settings as a flat JSON object without the tag.
fn settings_json(settings: &MethodSettings) -> Value {
    let mut v = serde_json::to_value(settings).expect("serializable");
    if let Some(o) = v.as_object_mut() {
        o.remove("method");
    }
    v
}

pub fn resolved_config(env: &ProblemEnvironment, config: &OptimizerConfig, options: &RunOptions) -> Value {
    json!({
        "task": env.id(),
        "environment": env.spec().environment,
        "method": config.method(),
        "budget": config.budget,
        "seed": config.seed,
        "settings": settings_json(&config.settings),
        "warmstart": config.warmstart,
        "evaluator": env.source().describe(),
        "relaxed_dim": env.space().relaxed_dim(),
        "catalog_version": options.catalog_version,
        "harness_version": HARNESS_VERSION,
        "rng": RNG_ALGORITHM,
        "wall_clock": options.wall_clock,
    })
}

/// Checks that the method can run on the task before anything is evaluated.
pub fn check_compatibility(env: &ProblemEnvironment, config: &OptimizerConfig) -> Result<(), RunError> {
    config.check().map_err(RunError::Config)?;
    let space = env.space();
    if config.method() == Method::Lbfgsb && space.count(VarKind::Continuous) == 0 {
        return Err(RunError::Config(format!(
            "lbfgsb needs at least one continuous variable; task `{}` has none",
            env.id()
        )));
    }
    for (k, p) in config.warmstart.iter().enumerate() {
        space.validate(p).map_err(|e| RunError::Config(format!("warm-start point {k}: {e}")))?;
    }
    Ok(())
}

struct Recorder<'a> {
    env: &'a ProblemEnvironment,
    budget: usize,
    seed: u64,
    started: Instant,
    wall_clock: bool,
    keep_objectives: bool,
    stream: Option<BufWriter<File>>,
    stream_path: PathBuf,
    io_error: Option<RunError>,
    records: Vec<EvalRecord>,
    best: Option<BestDesign>,
    failures: Vec<EvalFailure>,
    objective_points: Vec<ObjectivePoint>,
}

impl Recorder<'_> {
    fn evaluate_design(&mut self, design: &DesignPoint) -> Result<f64, Exhausted> {
        if self.records.len() >= self.budget {
            return Err(Exhausted);
        }
        let iter = self.records.len() + 1;
        let design_id = format!("s{}-{iter:05}", self.seed);
        let outcome = self.env.evaluate(design);
        let (reward, feasible) = match &outcome {
            Ok(r) => (r.reward, r.feasible),
            Err(e) => {
                self.failures.push(EvalFailure { iter, design_id: design_id.clone(), error: e.to_string() });
                (f64::NEG_INFINITY, false)
            }
        };
        let prev = self.records.last().map_or(f64::NEG_INFINITY, |r| r.best_reward);
        if let Ok(r) = &outcome {
            if self.best.is_none() || reward > prev {
                self.best = Some(BestDesign {
                    iter,
                    design_id: design_id.clone(),
                    reward,
                    feasible,
                    design: design.clone(),
                    metrics: r.metrics.clone(),
                });
            }
            if self.keep_objectives {
                self.objective_points.push(ObjectivePoint { iter, design_id: design_id.clone(), objectives: r.objectives.clone() });
            }
        }
        let record = EvalRecord {
            iter,
            design_id,
            reward,
            best_reward: prev.max(reward),
            feasible,
            n_evals: self.env.evaluation_count(),
            wall_ms: if self.wall_clock { self.started.elapsed().as_millis() as u64 } else { 0 },
        };
        if let Some(w) = &mut self.stream {
            let res = writeln!(w, "{}", record.csv_row()).and_then(|_| w.flush());
            if let Err(e) = res {
                self.io_error.get_or_insert(RunError::Io { path: self.stream_path.clone(), source: e });
                self.stream = None;
            }
        }
        self.records.push(record);
        Ok(reward)
    }
}

impl Objective for Recorder<'_> {
    fn dim(&self) -> usize {
        self.env.space().relaxed_dim()
    }

    fn remaining(&self) -> usize {
        self.budget - self.records.len()
    }

    fn evaluate(&mut self, z: &[f64]) -> Result<f64, Exhausted> {
        let design = self.env.space().denormalize(z).expect("optimizers stay in the unit cube");
        self.evaluate_design(&design)
    }
}

pub fn run_with_budget(env: &ProblemEnvironment, config: &OptimizerConfig) -> Result<Trajectory, RunError> {
    run_with_options(env, config, &RunOptions::default())
}

pub fn run_with_options(
    env: &ProblemEnvironment,
    config: &OptimizerConfig,
    options: &RunOptions,
) -> Result<Trajectory, RunError> {
    check_compatibility(env, config)?;
    let resolved = resolved_config(env, config, options);
    let stream_path = options.out_dir.as_ref().map(|d| d.join("results.csv")).unwrap_or_default();
    let stream = match &options.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
            write_json(&dir.join("resolved_config.json"), &resolved)?;
            let mut w = BufWriter::new(File::create(&stream_path).map_err(io_err(&stream_path))?);
            writeln!(w, "{RESULTS_HEADER}").and_then(|_| w.flush()).map_err(io_err(&stream_path))?;
            Some(w)
        }
        None => None,
    };

    let mut rec = Recorder {
        env,
        budget: config.budget,
        seed: config.seed,
        started: Instant::now(),
        wall_clock: options.wall_clock,
        keep_objectives: env.spec().is_multi_objective(),
        stream,
        stream_path,
        io_error: None,
        records: Vec::with_capacity(config.budget.min(1 << 16)),
        best: None,
        failures: Vec::new(),
        objective_points: Vec::new(),
    };

    let mut warm = Vec::with_capacity(config.warmstart.len());
    for p in &config.warmstart {
        let reward = rec.evaluate_design(p).expect("warm starts fit in the budget");
        let z = env.space().normalize(p).expect("validated");
        warm.push(Observation { z, reward });
    }

    let mut report = MethodReport::default();
    let seed = config.seed;
    // Err(Exhausted) is the normal end of a run that uses its whole budget
    let _ = match &config.settings {
        MethodSettings::Lbfgsb(s) => lbfgsb::run(&mut rec, s, seed, &warm, &mut report),
        MethodSettings::Pso(s) => pso::run(&mut rec, s, seed, &warm, &mut report),
        MethodSettings::Cmaes(s) => cmaes::run(&mut rec, s, seed, &warm, &mut report),
        MethodSettings::Bo(s) => bo::run(&mut rec, s, seed, &warm, &mut report),
        MethodSettings::Evolve(s) => evolve::run(&mut rec, s, seed, &warm, &mut report),
    };

    if let Some(e) = rec.io_error.take() {
        return Err(e);
    }
    let trajectory = Trajectory {
        task: env.id().to_string(),
        method: config.method(),
        seed,
        budget: config.budget,
        records: rec.records,
        best: rec.best,
        failures: rec.failures,
        warnings: report.warnings,
        objective_points: rec.objective_points,
        resolved_config: resolved,
    };
    if let Some(dir) = &options.out_dir {
        trajectory.write_tail(dir)?;
    }
    Ok(trajectory)
}

/// Runs `jobs` closures at a time over `items`, returning results in input
/// order. Each item should own everything it mutates.
pub fn run_pool<T, R, F>(jobs: usize, items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool");
    pool.install(|| items.into_par_iter().map(&f).collect())
}
