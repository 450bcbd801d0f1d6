use serde_json::{json, Map, Value};

use super::{ArtifactProbe, CheckResult, DiagnosticInputs, DiagnosticsError, Status, Tier};
use crate::problems::DiagnosticsProfile;
use crate::space::{DesignPoint, Domain, ParamSpace, Value as Param};

pub const G001_WARN_FRACTION: f64 = 0.6;
pub const G001_MARGIN_RATIO: f64 = 0.05;
pub const G002_WARN_SUM: f64 = 26.0;
pub const G003_WARN_SCORE: f64 = 2.4;
/// The coupling score is a sum of three terms each at most 1.
const G003_MAX_SCORE: f64 = 3.0;

const A001_WARN_REL_ERR: f64 = 0.02;
const A002_CD_MIN: f64 = 0.0;
const A002_CD_MAX: f64 = 1.5;
const A003_WARN_ABS: f64 = 200_000.0;

/// Severity given to a check that could not be evaluated.
const MISSING_SEVERITY: f64 = 0.5;

/// Severity of a tripped check, kept strictly positive so that only `ok`
/// carries zero.
fn tripped(severity: f64) -> f64 {
    severity.clamp(f64::MIN_POSITIVE, 1.0)
}

fn set(c: &mut CheckResult, status: Status, severity: f64, message: String) {
    c.status = status;
    c.severity = if status == Status::Ok { 0.0 } else { tripped(severity) };
    c.message = message;
}

/// Feasibility tier, F001 to F006.
pub fn check_feasibility(
    space: &ParamSpace,
    profile: &DiagnosticsProfile,
    inputs: &DiagnosticInputs,
    probe: &dyn ArtifactProbe,
) -> Vec<CheckResult> {
    let design = &inputs.design;
    let refs = inputs.design_refs();
    let mut out = Vec::with_capacity(6);

    let mut c = CheckResult::new("F001_required_params_present", Tier::Feasibility);
    let missing: Vec<&str> =
        space.variables().iter().filter(|v| design.get(&v.name).is_none()).map(|v| v.name.as_str()).collect();
    if missing.is_empty() {
        set(&mut c, Status::Ok, 0.0, "Every declared parameter has a value.".into());
    } else {
        set(&mut c, Status::Issue, 1.0, format!("{} declared parameter(s) have no value.", missing.len()));
    }
    c.value = json!({ "missing": missing });
    c.evidence_refs = inputs.design_path.iter().cloned().collect();
    out.push(c);

    let mut c = CheckResult::new("F002_param_bounds_respected", Tier::Feasibility);
    let violations = bound_violations(space, design);
    if violations.is_empty() {
        set(&mut c, Status::Ok, 0.0, "Every present parameter lies in its closed bounds.".into());
    } else {
        set(&mut c, Status::Issue, 1.0, format!("{} parameter(s) outside their bounds.", violations.len()));
    }
    c.value = json!({ "violations": violations });
    c.threshold = json!("within configured bounds");
    c.evidence_refs = refs.clone();
    out.push(c);

    let artifact_checks = [("F003_base_vtk_exists", "base_vtk_path"), ("F004_norm_stats_exists", "norm_stats_path")];
    for (id, key) in artifact_checks {
        out.push(artifact_check(id, key, profile, inputs, probe));
    }

    let mut c = CheckResult::new("F005_metrics_finite", Tier::Feasibility);
    let required: Vec<&String> = if profile.required_metrics.is_empty() {
        inputs.metrics.keys().collect()
    } else {
        profile.required_metrics.iter().collect()
    };
    let missing: Vec<&String> = required.iter().copied().filter(|k| !inputs.metrics.contains_key(*k)).collect();
    let non_finite: Vec<&String> =
        required.iter().copied().filter(|k| inputs.metrics.get(*k).is_some_and(|x| !x.is_finite())).collect();
    if !non_finite.is_empty() {
        set(&mut c, Status::Issue, 1.0, format!("{} metric(s) are not finite.", non_finite.len()));
    } else if !missing.is_empty() {
        set(&mut c, Status::Missing, MISSING_SEVERITY, format!("{} required metric(s) absent.", missing.len()));
    } else {
        set(&mut c, Status::Ok, 0.0, "Required metrics are present and finite.".into());
    }
    c.value = json!({ "missing": missing, "non_finite": non_finite });
    c.evidence_refs = refs.clone();
    out.push(c);

    let mut c = CheckResult::new("F006_body_style_norm_compatibility", Tier::Feasibility);
    match &inputs.compatibility {
        Some(t) if t.token == t.expected => {
            set(&mut c, Status::Ok, 0.0, format!("Compatibility token '{}' matches the model.", t.token));
            c.value = json!({ "token": t.token, "expected": t.expected });
        }
        Some(t) => {
            set(&mut c, Status::Issue, 1.0, format!("Token '{}' does not match model token '{}'.", t.token, t.expected));
            c.value = json!({ "token": t.token, "expected": t.expected });
        }
        None if profile.compatibility_token => {
            set(&mut c, Status::Missing, MISSING_SEVERITY, "No compatibility token supplied.".into());
        }
        None => set(&mut c, Status::Ok, 0.0, "Task does not use a compatibility token.".into()),
    }
    c.evidence_refs = refs;
    out.push(c);
    out
}

fn artifact_check(
    id: &str,
    key: &str,
    profile: &DiagnosticsProfile,
    inputs: &DiagnosticInputs,
    probe: &dyn ArtifactProbe,
) -> CheckResult {
    let mut c = CheckResult::new(id, Tier::Feasibility);
    let required = profile.required_artifacts.iter().any(|k| k == key);
    match inputs.model_artifacts.get(key) {
        Some(path) => {
            if probe.exists(path) {
                set(&mut c, Status::Ok, 0.0, format!("Artifact {key} found."));
            } else {
                set(&mut c, Status::Issue, 1.0, format!("Artifact {key} not found at {path}."));
            }
            c.value = json!(path);
            c.evidence_refs = vec![path.clone()];
        }
        None if required => set(&mut c, Status::Missing, MISSING_SEVERITY, format!("No path given for artifact {key}.")),
        None => set(&mut c, Status::Ok, 0.0, format!("Task does not use artifact {key}.")),
    }
    c
}

/// Keys that are present but outside the space: numeric values outside
/// closed bounds or not finite, unknown labels, and kind mismatches.
fn bound_violations(space: &ParamSpace, design: &DesignPoint) -> Vec<String> {
    let mut out = Vec::new();
    for v in space.variables() {
        let Some(value) = design.get(&v.name) else { continue };
        let ok = match (&v.domain, value) {
            (Domain::Categorical { levels }, Param::Label(s)) => levels.contains(s),
            (Domain::Categorical { .. }, Param::Real(_)) => false,
            (_, Param::Real(x)) => {
                let (l, u) = v.numeric_bounds().expect("numeric domain");
                x.is_finite() && l <= *x && *x <= u
            }
            (_, Param::Label(_)) => false,
        };
        if !ok {
            out.push(v.name.clone());
        }
    }
    out
}

/// Share of numeric parameters within `margin_ratio · (u − l)` of a bound,
/// and their names in space order. The comparison is inclusive.
pub fn near_bound_fraction(
    space: &ParamSpace,
    point: &DesignPoint,
    margin_ratio: f64,
) -> Result<(f64, Vec<String>), DiagnosticsError> {
    if !(margin_ratio > 0.0 && margin_ratio < 0.5) {
        return Err(DiagnosticsError::BadMargin(margin_ratio));
    }
    let mut total = 0usize;
    let mut keys = Vec::new();
    for v in space.variables() {
        let Some((l, u)) = v.numeric_bounds() else { continue };
        total += 1;
        if let Some(x) = point.real(&v.name) {
            if (x - l).min(u - x) <= margin_ratio * (u - l) {
                keys.push(v.name.clone());
            }
        }
    }
    if total == 0 {
        return Err(DiagnosticsError::NoNumericParams);
    }
    Ok((keys.len() as f64 / total as f64, keys))
}

/// Geometry tier, G001 to G003.
pub fn check_geometry(
    space: &ParamSpace,
    profile: &DiagnosticsProfile,
    point: &DesignPoint,
    refs: &[String],
) -> Vec<CheckResult> {
    let mut out = vec![g001(space, point), g002(profile, point), g003(space, profile, point)];
    for c in &mut out {
        c.evidence_refs = refs.to_vec();
    }
    out
}

fn g001(space: &ParamSpace, point: &DesignPoint) -> CheckResult {
    let mut c = CheckResult::new("G001_param_extremeness_ratio", Tier::Geometry);
    c.threshold = json!({ "warn_fraction": G001_WARN_FRACTION, "margin_ratio": G001_MARGIN_RATIO });
    match near_bound_fraction(space, point, G001_MARGIN_RATIO) {
        Ok((fraction, keys)) => {
            if fraction > G001_WARN_FRACTION {
                let severity = (0.5 + 2.0 * (fraction - G001_WARN_FRACTION)).clamp(0.0, 1.0);
                set(&mut c, Status::Warning, severity, format!("{fraction:.2} of numeric parameters sit near a bound."));
            } else {
                set(&mut c, Status::Ok, 0.0, format!("{fraction:.2} of numeric parameters sit near a bound."));
            }
            c.value = json!({ "near_bound_fraction": fraction, "near_bound_keys": keys });
        }
        Err(e) => set(&mut c, Status::Missing, MISSING_SEVERITY, e.to_string()),
    }
    c
}

fn g002(profile: &DiagnosticsProfile, point: &DesignPoint) -> CheckResult {
    let mut c = CheckResult::new("G002_combined_angle_stress", Tier::Geometry);
    c.threshold = json!({ "warn_sum": G002_WARN_SUM });
    let absent: Vec<&String> = profile.angle_params.iter().filter(|k| point.real(k).is_none()).collect();
    if !absent.is_empty() {
        set(&mut c, Status::Missing, MISSING_SEVERITY, format!("{} angle parameter(s) absent.", absent.len()));
        c.value = json!({ "missing": absent });
        return c;
    }
    let sum: f64 = profile.angle_params.iter().map(|k| point.real(k).unwrap().abs()).sum();
    if sum > G002_WARN_SUM {
        let severity = (sum / (2.0 * G002_WARN_SUM)).clamp(0.0, 1.0);
        set(&mut c, Status::Warning, severity, format!("Absolute angle sum {sum:.2} deg exceeds {G002_WARN_SUM}."));
    } else {
        set(&mut c, Status::Ok, 0.0, format!("Absolute angle sum {sum:.2} deg."));
    }
    c.value = json!({ "combined_abs_angle_sum": sum });
    c
}

fn g003(space: &ParamSpace, profile: &DiagnosticsProfile, point: &DesignPoint) -> CheckResult {
    let mut c = CheckResult::new("G003_size_width_length_coupling", Tier::Geometry);
    c.threshold = json!({ "warn_score": G003_WARN_SCORE });
    let roles = [(&profile.scale_param, ""), (&profile.width_param, "abs_"), (&profile.length_param, "abs_")];
    let mut value = Map::new();
    let mut score = 0.0;
    let mut absent = Vec::new();
    for (param, prefix) in roles {
        let Some(name) = param else { continue };
        let bounds = space.variable(name).and_then(|v| v.numeric_bounds());
        match (point.real(name), bounds) {
            (Some(x), Some((l, u))) => {
                // distance from the centre of the box, in half-widths
                let mid = 0.5 * (l + u);
                score += (x - mid).abs() / (0.5 * (u - l));
                let shown = if prefix.is_empty() { x } else { (x - mid).abs() };
                value.insert(format!("{prefix}{name}"), json!(shown));
            }
            _ => absent.push(name.clone()),
        }
    }
    if !absent.is_empty() {
        set(&mut c, Status::Missing, MISSING_SEVERITY, format!("{} coupling parameter(s) absent.", absent.len()));
        c.value = json!({ "missing": absent });
        return c;
    }
    value.insert("coupling_score".into(), json!(score));
    if score > G003_WARN_SCORE {
        let severity = (score / G003_MAX_SCORE).clamp(0.0, 1.0);
        set(&mut c, Status::Warning, severity, format!("Scale, width and length deviate together (score {score:.3})."));
    } else {
        set(&mut c, Status::Ok, 0.0, format!("Scale, width and length coupling score {score:.3}."));
    }
    c.value = Value::Object(value);
    c
}

/// Aerodynamic tier, A001 to A004.
pub fn check_aero(profile: &DiagnosticsProfile, inputs: &DiagnosticInputs, probe: &dyn ArtifactProbe) -> Vec<CheckResult> {
    let refs = inputs.design_refs();
    let m = &inputs.metrics;
    let mut out = Vec::with_capacity(4);

    let mut c = CheckResult::new("A001_drag_decomposition_consistency", Tier::Aero);
    c.threshold = json!({ "warn_rel_err": A001_WARN_REL_ERR });
    match (m.get("drag"), m.get("drag_pressure"), m.get("drag_shear")) {
        (Some(&drag), Some(&p), Some(&s)) => {
            let parts = p + s;
            let rel_err = (drag - parts).abs() / drag.abs().max(1e-12);
            if !rel_err.is_finite() {
                set(&mut c, Status::Error, 1.0, "Drag terms are not finite.".into());
                c.value = json!({ "drag": drag, "drag_pressure_plus_shear": parts, "rel_err": Value::Null });
            } else {
                if rel_err > A001_WARN_REL_ERR {
                    let severity = (rel_err - A001_WARN_REL_ERR) / A001_WARN_REL_ERR;
                    set(&mut c, Status::Warning, severity, format!("Drag parts disagree with total (rel_err={rel_err:.5})."));
                } else {
                    set(&mut c, Status::Ok, 0.0, format!("Drag parts add up to the total (rel_err={rel_err:.5})."));
                }
                c.value = json!({ "drag": drag, "drag_pressure_plus_shear": parts, "rel_err": rel_err });
            }
        }
        _ => set(&mut c, Status::Missing, MISSING_SEVERITY, "Need drag, drag_pressure and drag_shear.".into()),
    }
    c.evidence_refs = refs.clone();
    out.push(c);

    let mut c = CheckResult::new("A002_cd_plausible_range", Tier::Aero);
    c.threshold = json!({ "min": A002_CD_MIN, "max": A002_CD_MAX });
    match m.get("Cd") {
        Some(&cd) if !cd.is_finite() => set(&mut c, Status::Error, 1.0, "Cd is not finite.".into()),
        Some(&cd) => {
            let excess = (cd - A002_CD_MAX).max(A002_CD_MIN - cd);
            if excess > 0.0 {
                set(&mut c, Status::Warning, excess / A002_CD_MAX, format!("Cd {cd:.4} outside the plausible band."));
            } else {
                set(&mut c, Status::Ok, 0.0, "Cd inside the plausible band.".into());
            }
            c.value = json!(cd);
        }
        None => set(&mut c, Status::Missing, MISSING_SEVERITY, "No Cd metric.".into()),
    }
    c.evidence_refs = refs.clone();
    out.push(c);

    let mut c = CheckResult::new("A003_lift_plausible_range", Tier::Aero);
    c.threshold = json!({ "warn_abs": A003_WARN_ABS });
    match m.get("lift") {
        Some(&lift) if !lift.is_finite() => set(&mut c, Status::Error, 1.0, "Lift is not finite.".into()),
        Some(&lift) => {
            let excess = lift.abs() - A003_WARN_ABS;
            if excess > 0.0 {
                set(&mut c, Status::Warning, excess / A003_WARN_ABS, format!("Lift magnitude {:.1} is implausible.", lift.abs()));
            } else {
                set(&mut c, Status::Ok, 0.0, "Lift magnitude is plausible.".into());
            }
            c.value = json!(lift);
        }
        None => set(&mut c, Status::Missing, MISSING_SEVERITY, "No lift metric.".into()),
    }
    c.evidence_refs = refs;
    out.push(c);

    out.push(a004(profile, inputs, probe));
    out
}

fn a004(profile: &DiagnosticsProfile, inputs: &DiagnosticInputs, probe: &dyn ArtifactProbe) -> CheckResult {
    let mut c = CheckResult::new("A004_image_availability_signal", Tier::Aero);
    let expected = &profile.expected_images;
    c.threshold = json!({ "expected_total": expected.len() });
    if expected.is_empty() {
        set(&mut c, Status::Ok, 0.0, "Task expects no images.".into());
        c.value = json!({ "present": 0, "total": 0, "coverage": 1.0 });
        return c;
    }
    if inputs.images.is_empty() {
        set(&mut c, Status::Missing, MISSING_SEVERITY, "No image list supplied.".into());
        return c;
    }
    let mut suffix_map = Map::new();
    let mut absent = Vec::new();
    for suffix in expected {
        let hit = inputs.images.iter().find(|p| p.ends_with(suffix.as_str()) && probe.exists(p));
        if let Some(p) = hit {
            c.evidence_refs.push(p.clone());
        } else {
            absent.push(suffix.clone());
        }
        suffix_map.insert(suffix.clone(), json!(hit.is_some()));
    }
    let total = expected.len();
    let present = total - absent.len();
    let coverage = present as f64 / total as f64;
    if absent.is_empty() {
        set(&mut c, Status::Ok, 0.0, "Every expected image is available.".into());
    } else {
        set(&mut c, Status::Warning, absent.len() as f64 / total as f64, format!("Missing images: {}.", absent.join(", ")));
    }
    c.value = json!({ "present": present, "total": total, "coverage": coverage, "suffix_map": suffix_map, "absent": absent });
    c
}
