use aerobench::problems::catalog::Catalog;
use aerobench::problems::TaskSpec;
use aerobench::space::VarKind;
use anyhow::bail;
use serde_json::json;

const KEYS: [&str; 5] = ["id", "family", "environment", "kind", "sense"];

/// Variable kinds present in the task. A space counts as mixed when it
/// combines continuous and integer-valued variables.
fn kinds(t: &TaskSpec) -> Vec<&'static str> {
    let s = &t.space;
    let mut out = Vec::new();
    for (k, name) in [(VarKind::Continuous, "continuous"), (VarKind::Discrete, "discrete"), (VarKind::Categorical, "categorical")] {
        if s.count(k) > 0 {
            out.push(name);
        }
    }
    if s.count(VarKind::Continuous) > 0 && s.count(VarKind::Discrete) > 0 {
        out.push("mixed");
    }
    out
}

fn kind_summary(t: &TaskSpec) -> String {
    let s = &t.space;
    let parts: Vec<String> = [(VarKind::Continuous, "c"), (VarKind::Discrete, "d"), (VarKind::Categorical, "k")]
        .iter()
        .filter(|(k, _)| s.count(*k) > 0)
        .map(|(k, tag)| format!("{}{tag}", s.count(*k)))
        .collect();
    parts.join("+")
}

fn matches(t: &TaskSpec, key: &str, value: &str) -> bool {
    match key {
        "id" => t.id == value,
        "family" => t.family == value,
        "environment" => t.environment == value,
        "kind" => kinds(t).contains(&value),
        "sense" => serde_json::to_value(t.sense).ok().and_then(|v| v.as_str().map(|s| s == value)).unwrap_or(false),
        _ => unreachable!("keys checked up front"),
    }
}

pub fn select<'a>(catalog: &'a Catalog, filters: &[String]) -> anyhow::Result<Vec<&'a TaskSpec>> {
    let mut parsed = Vec::new();
    for f in filters {
        let Some((k, v)) = f.split_once('=') else { bail!("filter `{f}` is not KEY=VALUE") };
        if !KEYS.contains(&k) {
            bail!("unknown filter key `{k}` (expected one of {})", KEYS.join(", "));
        }
        parsed.push((k, v));
    }
    Ok(catalog.tasks.iter().filter(|t| parsed.iter().all(|(k, v)| matches(t, k, v))).collect())
}

pub fn list(catalog: &Catalog, filters: &[String], as_json: bool) -> anyhow::Result<u8> {
    let tasks = select(catalog, filters)?;
    if as_json {
        let rows: Vec<_> = tasks
            .iter()
            .map(|t| {
                json!({
                    "id": t.id,
                    "family": t.family,
                    "environment": t.environment,
                    "dimension": t.space.len(),
                    "relaxed_dimension": t.space.relaxed_dim(),
                    "kinds": kinds(t),
                    "operating_points": t.points.len(),
                    "sense": t.sense,
                    "constraints": t.constraints.len(),
                })
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&rows)?);
        return Ok(0);
    }
    println!("{:<24} {:>4} {:<10} {:>6} {:<9} {:>11}", "id", "dim", "kinds", "points", "sense", "constraints");
    for t in tasks {
        let sense = serde_json::to_value(t.sense)?.as_str().unwrap_or_default().to_string();
        println!(
            "{:<24} {:>4} {:<10} {:>6} {:<9} {:>11}",
            t.id,
            t.space.len(),
            kind_summary(t),
            t.points.len(),
            sense,
            t.constraints.len()
        );
    }
    Ok(0)
}
