//! Task formulations and the evaluation interface.
//!
//! A [`TaskSpec`] is pure data: the design space, operating points, derived
//! metrics, objective terms and constraints. A [`ProblemEnvironment`] pairs a
//! spec with a [`MetricSource`] that answers "metrics of this design at this
//! operating point" and turns those answers into an [`EvalResult`].

pub mod airfoil;
pub mod catalog;
pub mod formulas;
pub mod landscape;
pub mod pareto;
pub mod standin;
pub mod subprocess;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{DesignPoint, ParamSpace, SpaceError};
pub use formulas::FormulaError;
pub use pareto::Sense;
pub use standin::{StandIn, StandinModel};

/// Metric name → value.
pub type Metrics = BTreeMap<String, f64>;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mach: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reynolds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub altitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cl_target: Option<f64>,
    pub weight: f64,
}

impl OperatingPoint {
    pub fn at_alpha(alpha: f64) -> Self {
        Self { alpha: Some(alpha), weight: 1.0, ..Self::default() }
    }

    pub fn mach(mut self, mach: f64) -> Self {
        self.mach = Some(mach);
        self
    }

    pub fn reynolds(mut self, re: f64) -> Self {
        self.reynolds = Some(re);
        self
    }

    pub fn cl_target(mut self, cl: f64) -> Self {
        self.cl_target = Some(cl);
        self
    }

    pub fn weight(mut self, w: f64) -> Self {
        self.weight = w;
        self
    }

    fn check(&self) -> Result<(), String> {
        if !(self.weight >= 0.0 && self.weight.is_finite()) {
            return Err(format!("operating point weight {} must be finite and non-negative", self.weight));
        }
        let fields = [self.alpha, self.mach, self.reynolds, self.altitude, self.cl_target];
        if fields.iter().all(Option::is_none) {
            return Err("operating point sets no condition".into());
        }
        if fields.iter().flatten().any(|v| !v.is_finite()) {
            return Err("operating point has a non-finite condition".into());
        }
        Ok(())
    }
}

/// Interval and iteration count for lift-targeted angle-of-attack solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaSolve {
    pub lo: f64,
    pub hi: f64,
    pub iters: u32,
}

/// How per-point values of one metric combine into a term value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    /// The task has exactly one operating point.
    Single,
    /// `Σ wₖ vₖ / Σ wₖ`.
    WeightedMean,
    /// `Σ wₖ vₖ`, for weights that already sum to one.
    WeightedSum,
    /// Worst value in the term's own sense.
    WorstCase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTerm {
    pub label: String,
    pub metric: String,
    pub aggregate: Aggregate,
    pub sense: Sense,
    pub weight: f64,
}

impl ObjectiveTerm {
    pub fn new(label: &str, metric: &str, aggregate: Aggregate, sense: Sense) -> Self {
        Self { label: label.into(), metric: metric.into(), aggregate, sense, weight: 1.0 }
    }

    pub fn weighted(mut self, w: f64) -> Self {
        self.weight = w;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Inequality,
    Equality,
    Box,
}

/// Rule mapping metrics to a fractional violation in `[0, 1]`. Per-point
/// rules report the worst point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ConstraintRule {
    /// `metric ≥ bound`; full violation at `bound − scale`.
    AtLeast { metric: String, bound: f64, scale: f64 },
    /// `metric ≤ bound`; full violation at `bound + scale`.
    AtMost { metric: String, bound: f64, scale: f64 },
    /// `metric = target`; full violation at `|metric − target| = tolerance`.
    Equal { metric: String, target: f64, tolerance: f64 },
    /// `lower ≤ metric ≤ upper`; full violation `scale` outside.
    InRange { metric: String, lower: f64, upper: f64, scale: f64 },
    /// Fraction of lift targets outside the reachable lift range.
    TargetsReachable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub name: String,
    pub kind: ConstraintKind,
    #[serde(flatten)]
    pub rule: ConstraintRule,
}

impl ConstraintSpec {
    pub fn new(name: &str, kind: ConstraintKind, rule: ConstraintRule) -> Self {
        Self { name: name.into(), kind, rule }
    }
}

/// Per-point metrics computed from source metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "derive", rename_all = "snake_case")]
pub enum DerivedMetric {
    /// `LD = CL / CD`.
    LiftToDrag,
    /// `abs_CM = |CM|`.
    AbsMoment,
    /// `K_n = −ΔCM / ΔCL` over `α → α + δα`.
    StaticMargin { delta_alpha: f64 },
    /// `CL_alpha = ΔCL / δα`.
    LiftSlope { delta_alpha: f64 },
    /// `LD_proxy = CL* / Cfx` with the point's lift target.
    LiftToFriction,
    /// `M_LD = M · CL / CD`.
    MachLiftToDrag,
    /// `CL_floor_penalty = weight · max(0, cl_min − CL)²`.
    LiftFloorPenalty { cl_min: f64, weight: f64 },
    /// `CL_match_penalty = weight · (M² CL − M CL*)²`, with `CL*` fixed or
    /// taken from the point's lift target.
    MachLiftMatch { cl_star: Option<f64>, weight: f64 },
    /// `drag = drag_pressure + drag_shear` and `Cd` from those forces.
    CarForces,
}

impl DerivedMetric {
    fn alpha_step(&self) -> Option<f64> {
        match self {
            DerivedMetric::StaticMargin { delta_alpha } | DerivedMetric::LiftSlope { delta_alpha } => {
                Some(*delta_alpha)
            }
            _ => None,
        }
    }
}

/// Declarations the diagnostic checks need about a task.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsProfile {
    #[serde(default)]
    pub angle_params: Vec<String>,
    #[serde(default)]
    pub scale_param: Option<String>,
    #[serde(default)]
    pub width_param: Option<String>,
    #[serde(default)]
    pub length_param: Option<String>,
    #[serde(default)]
    pub required_metrics: Vec<String>,
    #[serde(default)]
    pub expected_images: Vec<String>,
    /// Model artifacts (by key) whose files must exist.
    #[serde(default)]
    pub required_artifacts: Vec<String>,
    /// Whether designs must carry a compatibility token for the model.
    #[serde(default)]
    pub compatibility_token: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    pub family: String,
    /// Grouping used for environment-level statistics.
    pub environment: String,
    pub description: String,
    pub space: ParamSpace,
    pub points: Vec<OperatingPoint>,
    #[serde(default)]
    pub alpha_solve: Option<AlphaSolve>,
    #[serde(default)]
    pub derived: Vec<DerivedMetric>,
    pub objective: Vec<ObjectiveTerm>,
    #[serde(default)]
    pub constraints: Vec<ConstraintSpec>,
    pub sense: Sense,
    pub penalty_weight: f64,
    pub model: StandinModel,
    pub standin_seed: u64,
    #[serde(default)]
    pub diagnostics: DiagnosticsProfile,
}

impl TaskSpec {
    /// Structural checks that do not need an evaluator.
    pub fn check(&self) -> Result<(), String> {
        let fail = |msg: String| Err(format!("task `{}`: {msg}", self.id));
        if self.points.is_empty() {
            return fail("no operating points".into());
        }
        for p in &self.points {
            if let Err(e) = p.check() {
                return fail(e);
            }
        }
        if !(self.penalty_weight >= 0.0 && self.penalty_weight.is_finite()) {
            return fail(format!("penalty weight {} must be non-negative", self.penalty_weight));
        }
        if self.objective.is_empty() {
            return fail("no objective terms".into());
        }
        for t in &self.objective {
            if t.aggregate == Aggregate::Single && self.points.len() != 1 {
                return fail(format!("term `{}` is single-point but the task has {} points", t.label, self.points.len()));
            }
            if !(t.weight >= 0.0 && t.weight.is_finite()) {
                return fail(format!("term `{}` has an invalid weight", t.label));
            }
        }
        let needs_alpha = self.derived.iter().any(|d| d.alpha_step().is_some());
        for p in &self.points {
            if p.cl_target.is_some() && self.alpha_solve.is_none() && p.alpha.is_none() {
                return fail("lift targets need an alpha solve interval".into());
            }
            if needs_alpha && p.alpha.is_none() && p.cl_target.is_none() {
                return fail("alpha-step metrics need an angle of attack at every point".into());
            }
        }
        if let Some(s) = self.alpha_solve {
            if !(s.lo < s.hi) || s.iters == 0 {
                return fail("invalid alpha solve interval".into());
            }
        }
        Ok(())
    }

    pub fn is_multi_objective(&self) -> bool {
        self.objective.len() > 1
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("evaluator failed: {0}")]
    Evaluator(String),
    #[error("evaluator timed out after {0:.1} s")]
    Timeout(f64),
    #[error("evaluator protocol error: {0}")]
    Protocol(String),
    #[error("metric `{metric}` missing at operating point {point}")]
    MissingMetric { metric: String, point: usize },
    #[error("metric `{metric}` is not finite at operating point {point}")]
    NonFinite { metric: String, point: usize },
    #[error("reward is not finite")]
    NonFiniteReward,
}

/// Outcome of one design evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    /// Objective-term values by label, plus every per-point metric averaged
    /// over points with the point weights.
    pub metrics: Metrics,
    pub per_point: Vec<Metrics>,
    pub violations: BTreeMap<String, f64>,
    /// Aggregated value of each objective term in its own sense.
    pub objectives: BTreeMap<String, f64>,
    /// Scalarized objective in the task's native sense, before penalties.
    pub objective: f64,
    /// Penalized reward; larger is better for every task.
    pub reward: f64,
    pub feasible: bool,
    pub confidence: f64,
}

/// Answers metric queries for a design at an operating point.
pub trait MetricSource: Send + Sync {
    fn point_metrics(&self, design: &DesignPoint, op: &OperatingPoint) -> Result<Metrics, EvalError>;

    /// Gradient of `metric` with respect to the relaxed coordinates, when the
    /// source knows it in closed form.
    fn metric_gradient(&self, _z: &[f64], _metric: &str) -> Option<Vec<f64>> {
        None
    }

    fn describe(&self) -> String;
}

/// A task bound to an evaluator, with an evaluation counter.
pub struct ProblemEnvironment {
    spec: Arc<TaskSpec>,
    source: Arc<dyn MetricSource>,
    evaluations: AtomicU64,
}

impl std::fmt::Debug for ProblemEnvironment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemEnvironment")
            .field("id", &self.spec.id)
            .field("source", &self.source.describe())
            .field("evaluations", &self.evaluation_count())
            .finish()
    }
}

struct ResolvedPoint {
    op: OperatingPoint,
    bracketed: bool,
}

impl ProblemEnvironment {
    pub fn new(spec: Arc<TaskSpec>, source: Arc<dyn MetricSource>) -> Self {
        Self { spec, source, evaluations: AtomicU64::new(0) }
    }

    /// Environment backed by the task's own stand-in model.
    pub fn standin(spec: Arc<TaskSpec>) -> Result<Self, String> {
        let source = StandIn::for_task(&spec)?;
        Ok(Self::new(spec, Arc::new(source)))
    }

    pub fn id(&self) -> &str {
        &self.spec.id
    }

    pub fn spec(&self) -> &TaskSpec {
        &self.spec
    }

    pub fn shared_spec(&self) -> Arc<TaskSpec> {
        Arc::clone(&self.spec)
    }

    pub fn space(&self) -> &ParamSpace {
        &self.spec.space
    }

    pub fn source(&self) -> &dyn MetricSource {
        self.source.as_ref()
    }

    /// Number of `evaluate` calls so far, failed ones included.
    pub fn evaluation_count(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    /// Evaluates one design at every operating point and scalarizes.
    ///
    /// Counts as exactly one evaluation however many operating points or
    /// lift-solve probes it needs.
    pub fn evaluate(&self, design: &DesignPoint) -> Result<EvalResult, EvalError> {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        let spec = &*self.spec;
        spec.space.validate(design)?;

        let mut per_point = Vec::with_capacity(spec.points.len());
        let mut unreachable = 0usize;
        for (k, op) in spec.points.iter().enumerate() {
            let resolved = self.resolve(design, op)?;
            if !resolved.bracketed {
                unreachable += 1;
            }
            let mut m = self.source.point_metrics(design, &resolved.op)?;
            if let Some(a) = resolved.op.alpha {
                m.insert("alpha".into(), a);
            }
            self.derive(design, &resolved.op, &mut m, k)?;
            for (name, v) in &m {
                if !v.is_finite() {
                    return Err(EvalError::NonFinite { metric: name.clone(), point: k });
                }
            }
            per_point.push(m);
        }

        let weights: Vec<f64> = spec.points.iter().map(|p| p.weight).collect();
        let mut objectives = BTreeMap::new();
        let mut objective = 0.0;
        for term in &spec.objective {
            let values = collect(&per_point, &term.metric)?;
            let v = aggregate(term, &values, &weights)?;
            objective += term.weight * term.sense.sign() * spec.sense.sign() * v;
            objectives.insert(term.label.clone(), v);
        }

        let mut violations = BTreeMap::new();
        for c in &spec.constraints {
            let v = match &c.rule {
                ConstraintRule::TargetsReachable => {
                    let targets = spec.points.iter().filter(|p| p.cl_target.is_some()).count().max(1);
                    unreachable as f64 / targets as f64
                }
                rule => {
                    let metric = rule_metric(rule);
                    let values = collect(&per_point, metric)?;
                    values.iter().map(|x| point_violation(rule, *x)).fold(0.0, f64::max)
                }
            };
            violations.insert(c.name.clone(), v.clamp(0.0, 1.0));
        }

        let reward = formulas::penalized_reward(
            spec.sense.sign() * objective,
            violations.iter().map(|(k, v)| (k.as_str(), *v)),
            spec.penalty_weight,
        )?;
        if !reward.is_finite() {
            return Err(EvalError::NonFiniteReward);
        }
        let feasible = violations.values().all(|v| *v == 0.0);
        let confidence = per_point.iter().filter_map(|m| m.get("confidence")).fold(1.0f64, |a, b| a.min(*b));

        let mut metrics = mean_metrics(&per_point, &weights);
        for (label, v) in &objectives {
            metrics.insert(label.clone(), *v);
        }
        Ok(EvalResult { metrics, per_point, violations, objectives, objective, reward, feasible, confidence })
    }

    /// Closed-form reward gradient on the relaxed cube, available for
    /// unconstrained single-point single-term tasks whose source exposes
    /// the objective metric's gradient.
    pub fn reward_gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        let spec = &*self.spec;
        if spec.points.len() != 1 || spec.objective.len() != 1 || !spec.constraints.is_empty() || !spec.derived.is_empty()
        {
            return None;
        }
        let term = &spec.objective[0];
        let g = self.source.metric_gradient(z, &term.metric)?;
        let scale = term.weight * term.sense.sign();
        Some(g.into_iter().map(|x| scale * x).collect())
    }

    fn resolve(&self, design: &DesignPoint, op: &OperatingPoint) -> Result<ResolvedPoint, EvalError> {
        let (Some(target), Some(solve)) = (op.cl_target, self.spec.alpha_solve) else {
            return Ok(ResolvedPoint { op: op.clone(), bracketed: true });
        };
        let mut probe = op.clone();
        let sol = formulas::bisect_alpha_to_cl(
            |alpha| {
                probe.alpha = Some(alpha);
                let m = self.source.point_metrics(design, &probe)?;
                m.get("CL").copied().ok_or(EvalError::MissingMetric { metric: "CL".into(), point: 0 })
            },
            target,
            solve.lo,
            solve.hi,
            solve.iters,
        )?;
        let mut resolved = op.clone();
        resolved.alpha = Some(sol.alpha);
        Ok(ResolvedPoint { op: resolved, bracketed: sol.bracketed })
    }

    fn derive(&self, design: &DesignPoint, op: &OperatingPoint, m: &mut Metrics, k: usize) -> Result<(), EvalError> {
        let get = |m: &Metrics, name: &str| -> Result<f64, EvalError> {
            m.get(name).copied().ok_or_else(|| EvalError::MissingMetric { metric: name.into(), point: k })
        };
        for d in &self.spec.derived {
            match d {
                DerivedMetric::LiftToDrag => {
                    let v = get(m, "CL")? / get(m, "CD")?;
                    m.insert("LD".into(), v);
                }
                DerivedMetric::AbsMoment => {
                    let v = get(m, "CM")?.abs();
                    m.insert("abs_CM".into(), v);
                }
                DerivedMetric::StaticMargin { delta_alpha } | DerivedMetric::LiftSlope { delta_alpha } => {
                    let alpha = op.alpha.ok_or_else(|| EvalError::MissingMetric { metric: "alpha".into(), point: k })?;
                    let mut shifted = op.clone();
                    shifted.alpha = Some(alpha + delta_alpha);
                    let m2 = self.source.point_metrics(design, &shifted)?;
                    let dcl = get(&m2, "CL")? - get(m, "CL")?;
                    if let DerivedMetric::StaticMargin { .. } = d {
                        let dcm = get(&m2, "CM")? - get(m, "CM")?;
                        m.insert("K_n".into(), -dcm / dcl);
                    } else {
                        m.insert("CL_alpha".into(), dcl / delta_alpha);
                    }
                }
                DerivedMetric::LiftToFriction => {
                    let cl = op.cl_target.map(Ok).unwrap_or_else(|| get(m, "CL"))?;
                    let v = cl / get(m, "Cfx")?;
                    m.insert("LD_proxy".into(), v);
                }
                DerivedMetric::MachLiftToDrag => {
                    let mach = op.mach.ok_or_else(|| EvalError::MissingMetric { metric: "mach".into(), point: k })?;
                    let v = mach * get(m, "CL")? / get(m, "CD")?;
                    m.insert("M_LD".into(), v);
                }
                DerivedMetric::LiftFloorPenalty { cl_min, weight } => {
                    let short = (cl_min - get(m, "CL")?).max(0.0);
                    m.insert("CL_floor_penalty".into(), weight * short * short);
                }
                DerivedMetric::MachLiftMatch { cl_star, weight } => {
                    let mach = op.mach.ok_or_else(|| EvalError::MissingMetric { metric: "mach".into(), point: k })?;
                    let target = cl_star
                        .or(op.cl_target)
                        .ok_or_else(|| EvalError::MissingMetric { metric: "cl_target".into(), point: k })?;
                    let r = mach * mach * get(m, "CL")? - mach * target;
                    m.insert("CL_match_penalty".into(), weight * r * r);
                }
                DerivedMetric::CarForces => {
                    let (fp, fs) = (get(m, "drag_pressure")?, get(m, "drag_shear")?);
                    m.insert("drag".into(), fp + fs);
                    m.insert("Cd".into(), formulas::car_drag_coefficient(fp, fs));
                }
            }
        }
        Ok(())
    }
}

fn collect(per_point: &[Metrics], metric: &str) -> Result<Vec<f64>, EvalError> {
    per_point
        .iter()
        .enumerate()
        .map(|(k, m)| m.get(metric).copied().ok_or_else(|| EvalError::MissingMetric { metric: metric.into(), point: k }))
        .collect()
}

fn aggregate(term: &ObjectiveTerm, values: &[f64], weights: &[f64]) -> Result<f64, EvalError> {
    Ok(match term.aggregate {
        Aggregate::Single => values[0],
        Aggregate::WeightedMean => formulas::weighted_multipoint(values, weights)?,
        Aggregate::WeightedSum => values.iter().zip(weights).map(|(v, w)| v * w).sum(),
        Aggregate::WorstCase => match term.sense {
            Sense::Maximize => formulas::robust_min(values)?,
            Sense::Minimize => -formulas::robust_min(&values.iter().map(|v| -v).collect::<Vec<_>>())?,
        },
    })
}

fn rule_metric(rule: &ConstraintRule) -> &str {
    match rule {
        ConstraintRule::AtLeast { metric, .. }
        | ConstraintRule::AtMost { metric, .. }
        | ConstraintRule::Equal { metric, .. }
        | ConstraintRule::InRange { metric, .. } => metric,
        ConstraintRule::TargetsReachable => "",
    }
}

fn point_violation(rule: &ConstraintRule, x: f64) -> f64 {
    match rule {
        ConstraintRule::AtLeast { bound, scale, .. } => formulas::violation_at_least(x, *bound, *scale),
        ConstraintRule::AtMost { bound, scale, .. } => formulas::violation_at_most(x, *bound, *scale),
        ConstraintRule::Equal { target, tolerance, .. } => formulas::violation_equal(x, *target, *tolerance),
        ConstraintRule::InRange { lower, upper, scale, .. } => formulas::violation_at_least(x, *lower, *scale)
            .max(formulas::violation_at_most(x, *upper, *scale)),
        ConstraintRule::TargetsReachable => 0.0,
    }
}

/// Point-weighted mean of every metric reported at all points. Falls back to
/// equal weights when all point weights are zero.
fn mean_metrics(per_point: &[Metrics], weights: &[f64]) -> Metrics {
    let total: f64 = weights.iter().sum();
    let w: Vec<f64> = if total > 0.0 {
        weights.iter().map(|x| x / total).collect()
    } else {
        vec![1.0 / per_point.len() as f64; per_point.len()]
    };
    let mut out = Metrics::new();
    if per_point.len() == 1 {
        return per_point[0].clone();
    }
    for key in per_point[0].keys() {
        if per_point.iter().all(|m| m.contains_key(key)) {
            let v = per_point.iter().zip(&w).map(|(m, w)| m[key] * w).sum();
            out.insert(key.clone(), v);
        }
    }
    out
}
