//! Deterministic design diagnostics.
//!
//! Three tiers of checks run over one design and its metrics:
//! feasibility (`F…`), geometry (`G…`) and aerodynamic plausibility
//! (`A…`). Each produces a [`CheckResult`]; the results are collected
//! into an [`EvidenceBundle`] and wrapped in a [`DiagnosticReport`] that
//! is validated against the shipped JSON schema before it is returned.
//!
//! A failed check is a result, never an `Err`.

mod checks;
mod schema;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{json, Map, Value};

pub use checks::{
    check_aero, check_feasibility, check_geometry, near_bound_fraction, G001_MARGIN_RATIO, G001_WARN_FRACTION,
    G002_WARN_SUM, G003_WARN_SCORE,
};
pub use schema::{schema_text, validate, SchemaViolation};

use crate::problems::TaskSpec;
use crate::space::DesignPoint;

pub const BUNDLE_VERSION: &str = "0.1.0";
pub const PIPELINE_VERSION: &str = "deterministic_v1";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("design has no numeric parameters")]
    NoNumericParams,
    #[error("margin ratio {0} outside (0, 0.5)")]
    BadMargin(f64),
    #[error("assembled report violates the schema: {0}")]
    Schema(SchemaViolation),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Feasibility,
    Geometry,
    Aero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Warning,
    Issue,
    Error,
    Missing,
}

impl Status {
    pub const ALL: [Status; 5] = [Status::Ok, Status::Warning, Status::Issue, Status::Error, Status::Missing];

    /// Process exit code for a worst-case status: 0 clean, 2 soft, 3 hard.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Warning | Status::Missing => 2,
            Status::Issue | Status::Error => 3,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Ok => "ok",
            Status::Warning => "warning",
            Status::Issue => "issue",
            Status::Error => "error",
            Status::Missing => "missing",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check_id: String,
    pub tier: Tier,
    pub status: Status,
    pub severity: f64,
    pub message: String,
    pub value: Value,
    pub threshold: Value,
    pub evidence_refs: Vec<String>,
    pub metadata: Map<String, Value>,
}

impl CheckResult {
    pub(crate) fn new(check_id: &str, tier: Tier) -> Self {
        Self {
            check_id: check_id.into(),
            tier,
            status: Status::Ok,
            severity: 0.0,
            message: String::new(),
            value: Value::Null,
            threshold: Value::Null,
            evidence_refs: Vec::new(),
            metadata: Map::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub ok: usize,
    pub warning: usize,
    pub issue: usize,
    pub error: usize,
    pub missing: usize,
}

impl StatusCounts {
    pub fn tally(checks: &[CheckResult]) -> Self {
        let mut c = Self::default();
        for r in checks {
            *c.get_mut(r.status) += 1;
        }
        c
    }

    pub fn get(&self, s: Status) -> usize {
        match s {
            Status::Ok => self.ok,
            Status::Warning => self.warning,
            Status::Issue => self.issue,
            Status::Error => self.error,
            Status::Missing => self.missing,
        }
    }

    fn get_mut(&mut self, s: Status) -> &mut usize {
        match s {
            Status::Ok => &mut self.ok,
            Status::Warning => &mut self.warning,
            Status::Issue => &mut self.issue,
            Status::Error => &mut self.error,
            Status::Missing => &mut self.missing,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub feasibility: StatusCounts,
    pub geometry: StatusCounts,
    pub aero: StatusCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceBundle {
    pub environment: String,
    pub design_id: String,
    pub feasibility: Vec<CheckResult>,
    pub geometry: Vec<CheckResult>,
    pub aero: Vec<CheckResult>,
    pub summary: Summary,
    pub data_quality_notes: Vec<String>,
}

impl EvidenceBundle {
    pub fn checks(&self) -> impl Iterator<Item = &CheckResult> {
        self.feasibility.iter().chain(&self.geometry).chain(&self.aero)
    }

    pub fn check(&self, id_prefix: &str) -> Option<&CheckResult> {
        self.checks().find(|c| c.check_id.starts_with(id_prefix))
    }

    /// Most serious status by exit code; `Ok` for an empty bundle.
    pub fn worst_status(&self) -> Status {
        self.checks().map(|c| c.status).max_by_key(|s| s.exit_code()).unwrap_or(Status::Ok)
    }
}

/// Opaque token pairing a design with the model it is evaluated by.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Compatibility {
    pub token: String,
    pub expected: String,
}

/// Everything the checks look at. Serializes as the report's
/// `input_snapshot`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticInputs {
    pub environment: String,
    pub design_id: String,
    #[serde(default)]
    pub design_path: Option<String>,
    #[serde(default)]
    pub case_dir: Option<String>,
    #[serde(rename = "design_params")]
    pub design: DesignPoint,
    /// Non-finite values are written as `null`.
    #[serde(default, deserialize_with = "lenient_metrics")]
    pub metrics: IndexMap<String, f64>,
    #[serde(default)]
    pub images: Vec<String>,
    #[serde(default)]
    pub field_stats: Map<String, Value>,
    #[serde(default)]
    pub model_artifacts: IndexMap<String, String>,
    #[serde(default)]
    pub compatibility: Option<Compatibility>,
    #[serde(default)]
    pub problem_setup: Option<Value>,
    #[serde(default)]
    pub run_context: Map<String, Value>,
    #[serde(default)]
    pub raw_feedback: String,
    #[serde(default)]
    pub timestamp_utc: Option<String>,
}

impl DiagnosticInputs {
    pub fn new(environment: &str, design_id: &str, design: DesignPoint) -> Self {
        Self {
            environment: environment.into(),
            design_id: design_id.into(),
            design_path: None,
            case_dir: None,
            design,
            metrics: IndexMap::new(),
            images: Vec::new(),
            field_stats: Map::new(),
            model_artifacts: IndexMap::new(),
            compatibility: None,
            problem_setup: None,
            run_context: Map::new(),
            raw_feedback: String::new(),
            timestamp_utc: None,
        }
    }

    /// References every design-level check cites.
    pub(crate) fn design_refs(&self) -> Vec<String> {
        self.design_path.iter().chain(&self.case_dir).cloned().collect()
    }
}

/// Reads a flat metrics object. Accepts numbers, `null` (read as NaN) and
/// numeric strings such as `"nan"` or `"-inf"`.
pub fn metrics_from_json(v: &Value) -> Result<IndexMap<String, f64>, String> {
    let obj = v.as_object().ok_or_else(|| "metrics must be a JSON object".to_string())?;
    obj.iter()
        .map(|(k, v)| {
            let x = match v {
                Value::Number(n) => n.as_f64().unwrap_or(f64::NAN),
                Value::Null => f64::NAN,
                Value::String(s) => {
                    s.trim().parse::<f64>().map_err(|_| format!("metric {k}: expected a number, got {s:?}"))?
                }
                other => return Err(format!("metric {k}: expected a number, got {other}")),
            };
            Ok((k.clone(), x))
        })
        .collect()
}

fn lenient_metrics<'de, D: Deserializer<'de>>(d: D) -> Result<IndexMap<String, f64>, D::Error> {
    let raw = Value::deserialize(d)?;
    metrics_from_json(&raw).map_err(serde::de::Error::custom)
}

/// Answers whether a referenced file exists.
pub trait ArtifactProbe {
    fn exists(&self, path: &str) -> bool;
}

/// Looks on the local file system.
#[derive(Debug, Clone, Copy, Default)]
pub struct FsProbe;

impl ArtifactProbe for FsProbe {
    fn exists(&self, path: &str) -> bool {
        Path::new(path).exists()
    }
}

impl ArtifactProbe for HashSet<String> {
    fn exists(&self, path: &str) -> bool {
        self.contains(path)
    }
}

impl<F: Fn(&str) -> bool> ArtifactProbe for F {
    fn exists(&self, path: &str) -> bool {
        self(path)
    }
}

/// Runs every tier and tallies the summary.
pub fn run_checks(task: &TaskSpec, inputs: &DiagnosticInputs, probe: &dyn ArtifactProbe) -> EvidenceBundle {
    let profile = &task.diagnostics;
    let feasibility = check_feasibility(&task.space, profile, inputs, probe);
    let geometry = check_geometry(&task.space, profile, &inputs.design, &inputs.design_refs());
    let aero = check_aero(profile, inputs, probe);
    let summary = Summary {
        feasibility: StatusCounts::tally(&feasibility),
        geometry: StatusCounts::tally(&geometry),
        aero: StatusCounts::tally(&aero),
    };
    let mut notes = Vec::new();
    for c in feasibility.iter().chain(&geometry).chain(&aero) {
        if c.status == Status::Missing {
            notes.push(format!("{}: {}", c.check_id, c.message));
        }
    }
    EvidenceBundle {
        environment: inputs.environment.clone(),
        design_id: inputs.design_id.clone(),
        feasibility,
        geometry,
        aero,
        summary,
        data_quality_notes: notes,
    }
}

/// The full diagnostic document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub version: String,
    pub environment: String,
    pub design_id: String,
    pub timestamp_utc: Option<String>,
    pub input_snapshot: DiagnosticInputs,
    pub evidence_bundle: EvidenceBundle,
    /// Slot for an external integrative report.
    pub llm_report: Value,
    pub trace: Value,
    pub provenance: Value,
}

impl DiagnosticReport {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn exit_code(&self) -> i32 {
        self.evidence_bundle.worst_status().exit_code()
    }

    /// Replaces the report slot after checking that the result still
    /// satisfies the schema.
    pub fn with_llm_report(mut self, report: Value) -> Result<Self, DiagnosticsError> {
        self.llm_report = report;
        self.trace["llm_diagnostic_status"] =
            self.llm_report.get("diagnostic_status").cloned().unwrap_or(Value::Null);
        validate(&self.to_json()).map_err(DiagnosticsError::Schema)?;
        Ok(self)
    }
}

/// Problem description recorded in the snapshot when the caller supplies none.
pub fn problem_setup(task: &TaskSpec) -> Value {
    let mut bounds = Map::new();
    for v in task.space.variables() {
        let entry = match v.numeric_bounds() {
            Some((l, u)) => json!([l, u]),
            None => serde_json::to_value(&v.domain).expect("domain serializes"),
        };
        bounds.insert(v.name.clone(), entry);
    }
    let objective: Vec<Value> =
        task.objective.iter().map(|t| json!({"name": t.label, "metric": t.metric, "sense": t.sense})).collect();
    json!({
        "task": task.id,
        "objective": objective,
        "constraints": task.constraints.iter().map(|c| c.name.clone()).collect::<Vec<_>>(),
        "param_bounds": bounds,
    })
}

/// Runs the checks and assembles a schema-valid report.
///
/// `timestamp_utc` is left to the caller so repeated runs can be
/// byte-identical.
pub fn build_report(
    task: &TaskSpec,
    inputs: &DiagnosticInputs,
    probe: &dyn ArtifactProbe,
    timestamp_utc: Option<String>,
) -> Result<DiagnosticReport, DiagnosticsError> {
    let bundle = run_checks(task, inputs, probe);
    let mut snapshot = inputs.clone();
    if snapshot.problem_setup.is_none() {
        snapshot.problem_setup = Some(problem_setup(task));
    }
    let report = DiagnosticReport {
        version: BUNDLE_VERSION.into(),
        environment: inputs.environment.clone(),
        design_id: inputs.design_id.clone(),
        timestamp_utc,
        input_snapshot: snapshot,
        evidence_bundle: bundle,
        llm_report: json!({"diagnostic_status": "skipped"}),
        trace: json!({"pipeline_version": PIPELINE_VERSION, "llm_diagnostic_status": "skipped"}),
        provenance: json!({
            "task": task.id,
            "harness_version": env!("CARGO_PKG_VERSION"),
            "catalog_version": crate::problems::catalog::CATALOG_VERSION,
        }),
    };
    validate(&report.to_json()).map_err(DiagnosticsError::Schema)?;
    Ok(report)
}

/// Current time in the report's timestamp format.
pub fn utc_timestamp() -> String {
    chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

#[cfg(test)]
mod tests;
