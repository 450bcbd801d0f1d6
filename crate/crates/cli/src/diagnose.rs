use std::fs;
use std::path::{Path, PathBuf};

use aerobench::diagnostics::{build_report, metrics_from_json, utc_timestamp, Compatibility, DiagnosticInputs, FsProbe};
use aerobench::problems::catalog::Catalog;
use aerobench::space::DesignPoint;
use anyhow::{bail, Context};
use clap::Args;
use indexmap::IndexMap;

#[derive(Args)]
pub struct DiagnoseArgs {
    /// Task whose space and checks apply.
    #[arg(long)]
    task: String,
    /// Design JSON: variable name to value, optional `name`.
    #[arg(long, required_unless_present = "snapshot")]
    design: Option<PathBuf>,
    /// Metrics JSON: metric name to number.
    #[arg(long, required_unless_present = "snapshot")]
    metrics: Option<PathBuf>,
    /// A complete input snapshot instead of --design and --metrics.
    #[arg(long, conflicts_with_all = ["design", "metrics"])]
    snapshot: Option<PathBuf>,
    /// Where the evidence bundle is written.
    #[arg(long)]
    out: PathBuf,
    /// Image files produced for the design.
    #[arg(long = "image")]
    images: Vec<String>,
    /// Model artifact as KEY=PATH, e.g. norm_stats_path=model/stats.pt.
    #[arg(long = "artifact", value_name = "KEY=PATH")]
    artifacts: Vec<String>,
    /// Compatibility tokens as TOKEN=EXPECTED.
    #[arg(long, value_name = "TOKEN=EXPECTED")]
    compat: Option<String>,
    #[arg(long)]
    design_id: Option<String>,
    /// Write `timestamp_utc` as null so output is reproducible.
    #[arg(long)]
    no_timestamp: bool,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn pair(s: &str, what: &str) -> anyhow::Result<(String, String)> {
    match s.split_once('=') {
        Some((a, b)) if !a.is_empty() => Ok((a.to_string(), b.to_string())),
        _ => bail!("{what} `{s}` is not of the form A=B"),
    }
}

pub fn diagnose(catalog: &Catalog, args: DiagnoseArgs) -> anyhow::Result<u8> {
    let task = catalog.task(&args.task)?;
    let mut inputs = match &args.snapshot {
        Some(p) => read_json::<DiagnosticInputs>(p)?,
        None => {
            let design_path = args.design.as_ref().expect("clap requires --design");
            let design: DesignPoint = read_json(design_path)?;
            let id = args
                .design_id
                .clone()
                .or_else(|| design.name.clone())
                .or_else(|| design_path.file_stem().map(|s| s.to_string_lossy().into_owned()))
                .unwrap_or_else(|| "design".into());
            let mut inputs = DiagnosticInputs::new(&task.environment, &id, design);
            inputs.design_path = Some(design_path.display().to_string());
            let metrics_path = args.metrics.as_ref().expect("clap requires --metrics");
            let raw: serde_json::Value = read_json(metrics_path)?;
            inputs.metrics =
                metrics_from_json(&raw).map_err(|e| anyhow::anyhow!("{}: {e}", metrics_path.display()))?;
            inputs
        }
    };
    if let Some(id) = &args.design_id {
        inputs.design_id = id.clone();
    }
    inputs.images.extend(args.images.iter().cloned());
    let mut artifacts = IndexMap::new();
    for a in &args.artifacts {
        let (k, v) = pair(a, "artifact")?;
        artifacts.insert(k, v);
    }
    inputs.model_artifacts.extend(artifacts);
    if let Some(c) = &args.compat {
        let (token, expected) = pair(c, "compat")?;
        inputs.compatibility = Some(Compatibility { token, expected });
    }

    let timestamp = if args.no_timestamp { None } else { Some(utc_timestamp()) };
    let report = build_report(task, &inputs, &FsProbe, timestamp)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(&args.out, report.to_json_string()).with_context(|| format!("writing {}", args.out.display()))?;

    let s = &report.evidence_bundle.summary;
    for (tier, c) in [("feasibility", s.feasibility), ("geometry", s.geometry), ("aero", s.aero)] {
        println!(
            "{tier:<12} ok={} warning={} issue={} error={} missing={}",
            c.ok, c.warning, c.issue, c.error, c.missing
        );
    }
    let worst = report.evidence_bundle.worst_status();
    println!("worst status: {worst}; bundle written to {}", args.out.display());
    Ok(worst.exit_code() as u8)
}
