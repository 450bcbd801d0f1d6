use super::*;
use crate::problems::catalog::{car_space, Catalog};

fn car() -> TaskSpec {
    Catalog::builtin().task("car_cd").unwrap().clone()
}

fn snapshot() -> DiagnosticInputs {
    serde_json::from_str(include_str!("../../tests/fixtures/car_snapshot.json")).unwrap()
}

fn midpoint(space: &crate::space::ParamSpace) -> DesignPoint {
    let mut p = DesignPoint::new();
    for v in space.variables() {
        let (l, u) = v.numeric_bounds().unwrap();
        p = p.with(&v.name, 0.5 * (l + u));
    }
    p
}

fn everything_exists(_: &str) -> bool {
    true
}

#[test]
fn missing_param_is_listed() {
    let mut inputs = snapshot();
    inputs.design.values.shift_remove("trunklid_x");
    let b = run_checks(&car(), &inputs, &everything_exists);
    let f001 = b.check("F001").unwrap();
    assert_eq!(f001.status, Status::Issue);
    assert_eq!(f001.value["missing"], json!(["trunklid_x"]));
}

#[test]
fn bounds_are_closed() {
    let mut inputs = snapshot();
    inputs.design.values.insert("car_size".into(), 1.2.into());
    let b = run_checks(&car(), &inputs, &everything_exists);
    assert_eq!(b.check("F002").unwrap().status, Status::Ok);

    inputs.design.values.insert("car_size".into(), (1.2 + 1e-9).into());
    let b = run_checks(&car(), &inputs, &everything_exists);
    let f002 = b.check("F002").unwrap();
    assert_eq!(f002.status, Status::Issue);
    assert_eq!(f002.value["violations"], json!(["car_size"]));
}

#[test]
fn absent_artifacts_fail_the_probe() {
    let b = run_checks(&car(), &snapshot(), &|p: &str| !p.ends_with(".pt"));
    assert_eq!(b.check("F003").unwrap().status, Status::Ok);
    assert_eq!(b.check("F004").unwrap().status, Status::Issue);
}

#[test]
fn compatibility_token_mismatch() {
    let mut inputs = snapshot();
    inputs.compatibility = Some(Compatibility { token: "N".into(), expected: "E".into() });
    assert_eq!(run_checks(&car(), &inputs, &everything_exists).check("F006").unwrap().status, Status::Issue);
    inputs.compatibility = None;
    assert_eq!(run_checks(&car(), &inputs, &everything_exists).check("F006").unwrap().status, Status::Missing);
}

#[test]
fn midpoint_design_has_nothing_near_bounds() {
    let space = car_space();
    let (f, keys) = near_bound_fraction(&space, &midpoint(&space), 0.05).unwrap();
    assert_eq!(f, 0.0);
    assert!(keys.is_empty());
}

#[test]
fn margin_edge_is_inclusive() {
    let space = crate::space::ParamSpace::new(vec![crate::space::VariableSpec::continuous("x", 0.0, 8.0, "")]).unwrap();
    // 0.4 = 0.05 · 8 is exactly representable, so the edge is tested exactly
    let at_edge = DesignPoint::new().with("x", 0.4);
    assert_eq!(near_bound_fraction(&space, &at_edge, 0.05).unwrap().0, 1.0);
    let inside = DesignPoint::new().with("x", 0.4 + 1e-12);
    assert_eq!(near_bound_fraction(&space, &inside, 0.05).unwrap().0, 0.0);
}

#[test]
fn near_bound_errors() {
    let cat = crate::space::ParamSpace::new(vec![crate::space::VariableSpec::categorical("c", &["a", "b"])]).unwrap();
    assert_eq!(near_bound_fraction(&cat, &DesignPoint::new(), 0.05), Err(DiagnosticsError::NoNumericParams));
    assert!(matches!(near_bound_fraction(&car_space(), &DesignPoint::new(), 0.5), Err(DiagnosticsError::BadMargin(_))));
}

#[test]
fn neutral_geometry_is_ok() {
    let task = car();
    let mut p = midpoint(&task.space);
    for a in &task.diagnostics.angle_params {
        p.values.insert(a.clone(), 0.0.into());
    }
    let g = check_geometry(&task.space, &task.diagnostics, &p, &[]);
    assert!(g.iter().all(|c| c.status == Status::Ok && c.severity == 0.0), "{g:?}");
    assert_eq!(g[1].value["combined_abs_angle_sum"], json!(0.0));
    assert_eq!(g[2].value["coupling_score"], json!(0.0));
}

#[test]
fn out_of_band_cd_and_partial_images() {
    let mut inputs = snapshot();
    inputs.metrics.insert("Cd".into(), 2.0);
    inputs.images.truncate(4);
    let b = run_checks(&car(), &inputs, &everything_exists);
    let a002 = b.check("A002").unwrap();
    assert_eq!(a002.status, Status::Warning);
    assert!((a002.severity - 0.5 / 1.5).abs() < 1e-15);
    let a004 = b.check("A004").unwrap();
    assert_eq!(a004.status, Status::Warning);
    assert!((a004.value["coverage"].as_f64().unwrap() - 4.0 / 6.0).abs() < 1e-15);
    assert_eq!(a004.value["absent"], json!(["WSSx_top.png", "WSSx_side.png"]));
}

#[test]
fn empty_metrics_leave_aero_missing() {
    let mut inputs = snapshot();
    inputs.metrics.clear();
    inputs.images.clear();
    let b = run_checks(&car(), &inputs, &everything_exists);
    assert!(b.aero.iter().all(|c| c.status == Status::Missing));
    assert_eq!(b.summary.aero.missing, 4);
    assert_eq!(b.check("F005").unwrap().status, Status::Missing);
    assert!(!b.data_quality_notes.is_empty());
    build_report(&car(), &inputs, &everything_exists, None).unwrap();
}

#[test]
fn non_finite_metric_is_an_issue() {
    let mut inputs = snapshot();
    inputs.metrics.insert("lift".into(), f64::NAN);
    let b = run_checks(&car(), &inputs, &everything_exists);
    assert_eq!(b.check("F005").unwrap().status, Status::Issue);
    assert_eq!(b.check("A003").unwrap().status, Status::Error);
    let report = build_report(&car(), &inputs, &everything_exists, None).unwrap();
    assert_eq!(report.exit_code(), 3);
    // NaN is written as null and read back as NaN
    let back: DiagnosticReport = serde_json::from_str(&report.to_json_string()).unwrap();
    assert!(back.input_snapshot.metrics["lift"].is_nan());
}

#[test]
fn exit_codes_follow_worst_status() {
    let task = car();
    let report = build_report(&task, &snapshot(), &everything_exists, None).unwrap();
    assert_eq!(report.exit_code(), 2);

    let mut clean = snapshot();
    clean.design = midpoint(&task.space);
    let report = build_report(&task, &clean, &everything_exists, None).unwrap();
    assert_eq!(report.exit_code(), 0, "{:?}", report.evidence_bundle);
}

#[test]
fn injected_report_must_fit_schema() {
    let report = build_report(&car(), &snapshot(), &everything_exists, None).unwrap();
    let r = report.clone().with_llm_report(json!({"diagnostic_status": "complete", "confidence": 0.9})).unwrap();
    assert_eq!(r.trace["llm_diagnostic_status"], json!("complete"));
    assert!(report.with_llm_report(json!({"confidence": 0.9})).is_err());
}

#[test]
fn schema_rejects_tampered_bundles() {
    let good = build_report(&car(), &snapshot(), &everything_exists, None).unwrap().to_json();
    validate(&good).unwrap();
    let mut bad = good.clone();
    bad["evidence_bundle"]["geometry"][0]["severity"] = json!(1.5);
    assert!(validate(&bad).is_err());
    let mut bad = good.clone();
    bad["evidence_bundle"]["feasibility"][0]["severity"] = json!(0.2);
    assert!(validate(&bad).is_err());
    let mut bad = good;
    bad["version"] = json!("0.2.0");
    assert!(validate(&bad).is_err());
}
