use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use aerobench::optimizers::runner::{check_compatibility, HARNESS_VERSION};
use aerobench::optimizers::{run_pool, run_with_options, Method, OptimizerConfig, RunOptions};
use aerobench::problems::catalog::Catalog;
use aerobench::problems::subprocess::SubprocessSource;
use aerobench::problems::{ProblemEnvironment, TaskSpec};
use aerobench::space::{DesignPoint, Domain, ParamSpace, Value, NAME_KEY};
use anyhow::{bail, Context};
use clap::Args;
use serde_json::json;

#[derive(Args)]
pub struct RunArgs {
    /// Task ids, comma separated or repeated.
    #[arg(long = "task", required = true, value_delimiter = ',')]
    tasks: Vec<String>,
    /// Methods, comma separated or repeated; `all` for every method.
    #[arg(long = "method", required = true, value_delimiter = ',')]
    methods: Vec<String>,
    /// Seeds: `42`, `0,1,2`, `0..10` or `0..=9`.
    #[arg(long, default_value = "0")]
    seeds: String,
    /// Evaluations per run, warm starts and gradient stencils included.
    #[arg(long)]
    budget: usize,
    /// Runs executed at once.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output root; runs land in `<out>/<task>/<method>/seed<k>/`.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// CSV of designs evaluated before the method starts.
    #[arg(long)]
    warmstart: Option<PathBuf>,
    /// External evaluator command replacing the stand-in model.
    #[arg(long)]
    evaluator: Option<String>,
    /// Seconds to wait for each evaluator reply.
    #[arg(long, default_value_t = 300.0, requires = "evaluator")]
    eval_timeout: f64,
    /// Record elapsed milliseconds per evaluation (breaks byte-identical reruns).
    #[arg(long)]
    wall_clock: bool,
}

pub fn parse_seeds(s: &str) -> anyhow::Result<Vec<u64>> {
    let s = s.trim();
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..=") {
        (a.trim().parse()?..=b.trim().parse()?).collect()
    } else if let Some((a, b)) = s.split_once("..") {
        (a.trim().parse()?..b.trim().parse()?).collect()
    } else {
        s.split(',').map(|x| x.trim().parse::<u64>()).collect::<Result<_, _>>().with_context(|| format!("seeds `{s}`"))?
    };
    if seeds.is_empty() {
        bail!("seed list `{s}` is empty");
    }
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != seeds.len() {
        bail!("seed list `{s}` repeats a seed");
    }
    Ok(seeds)
}

fn parse_methods(names: &[String]) -> anyhow::Result<Vec<Method>> {
    let mut out = Vec::new();
    for n in names {
        if n == "all" {
            out.extend(Method::ALL);
        } else {
            out.push(n.parse::<Method>().map_err(|e| anyhow::anyhow!("{e}"))?);
        }
    }
    out.dedup();
    Ok(out)
}

/// Reads warm-start designs: a header of variable names (and optionally
/// `name`), one design per row.
pub fn read_warmstart(path: &Path, space: &ParamSpace) -> anyhow::Result<Vec<DesignPoint>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header = reader.headers()?.clone();
    let mut points = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        let mut p = DesignPoint::new();
        for (key, field) in header.iter().zip(rec.iter()) {
            if key == NAME_KEY {
                p.name = Some(field.to_string());
                continue;
            }
            let value = match space.variable(key).map(|v| &v.domain) {
                Some(Domain::Categorical { .. }) => Value::Label(field.to_string()),
                _ => Value::Real(
                    field.trim().parse().with_context(|| format!("{}: row {}, `{key}`", path.display(), row + 1))?,
                ),
            };
            p.values.insert(key.to_string(), value);
        }
        points.push(p);
    }
    Ok(points)
}

fn environment(spec: &TaskSpec, args: &RunArgs) -> anyhow::Result<ProblemEnvironment> {
    let spec = Arc::new(spec.clone());
    Ok(match &args.evaluator {
        Some(cmd) => {
            let timeout = Duration::try_from_secs_f64(args.eval_timeout).context("--eval-timeout")?;
            ProblemEnvironment::new(spec, Arc::new(SubprocessSource::from_command_line(cmd)?.with_timeout(timeout)))
        }
        None => ProblemEnvironment::standin(spec).map_err(anyhow::Error::msg)?,
    })
}

struct Job {
    task: TaskSpec,
    config: OptimizerConfig,
    dir: PathBuf,
}

/// Writes `manifest.json`, or `manifest.<n>.json` when earlier manifests exist.
fn write_manifest(root: &Path, manifest: &serde_json::Value) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
    let mut path = root.join("manifest.json");
    let mut n = 1;
    while path.exists() {
        path = root.join(format!("manifest.{n}.json"));
        n += 1;
    }
    fs::write(&path, serde_json::to_string_pretty(manifest)?).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn run(catalog: &Catalog, args: RunArgs) -> anyhow::Result<u8> {
    let methods = parse_methods(&args.methods)?;
    let seeds = parse_seeds(&args.seeds)?;
    if args.budget == 0 {
        bail!("budget must be positive");
    }

    // every configuration is checked before anything is written or evaluated
    let mut jobs = Vec::new();
    for id in &args.tasks {
        let task = catalog.task(id)?;
        let warm = match &args.warmstart {
            Some(p) => read_warmstart(p, &task.space)?,
            None => Vec::new(),
        };
        let env = ProblemEnvironment::standin(Arc::new(task.clone())).map_err(anyhow::Error::msg)?;
        for &m in &methods {
            for &seed in &seeds {
                let config = OptimizerConfig::new(m, args.budget, seed).with_warmstart(warm.clone());
                check_compatibility(&env, &config).with_context(|| format!("{id}/{m}"))?;
                let dir = args.out.join(id).join(m.name()).join(format!("seed{seed}"));
                jobs.push(Job { task: task.clone(), config, dir });
            }
        }
    }

    let manifest = json!({
        "tasks": args.tasks,
        "methods": methods,
        "seeds": seeds,
        "budget": args.budget,
        "output_root": args.out,
        "warmstart": args.warmstart,
        "evaluator": args.evaluator,
        "eval_timeout_s": args.evaluator.as_ref().map(|_| args.eval_timeout),
        "catalog_version": catalog.version,
        "harness_version": HARNESS_VERSION,
        "timestamp_utc": aerobench::diagnostics::utc_timestamp(),
    });
    write_manifest(&args.out, &manifest)?;

    let log_path = args.out.join("progress.log");
    let log = Mutex::new(OpenOptions::new().create(true).append(true).open(&log_path)?);
    let options = RunOptions { catalog_version: catalog.version.clone(), wall_clock: args.wall_clock, out_dir: None };

    let results = run_pool(args.jobs, jobs, |job| {
        let run_id = format!("{}/{}/seed{}", job.task.id, job.config.method(), job.config.seed);
        let outcome = environment(&job.task, &args).and_then(|env| {
            let opts = RunOptions { out_dir: Some(job.dir.clone()), ..options.clone() };
            Ok(run_with_options(&env, &job.config, &opts)?)
        });
        let line = match &outcome {
            Ok(t) => format!(
                "{} {run_id} done evals={} best={} failures={}",
                aerobench::diagnostics::utc_timestamp(),
                t.records.len(),
                t.best_reward().map(|b| b.to_string()).unwrap_or_else(|| "none".into()),
                t.failures.len()
            ),
            Err(e) => format!("{} {run_id} error {e:#}", aerobench::diagnostics::utc_timestamp()),
        };
        if let Ok(mut f) = log.lock() {
            let _ = writeln!(f, "{line}");
        }
        (run_id, outcome)
    });

    let mut failed = 0;
    for (run_id, outcome) in results {
        match outcome {
            Ok(t) => {
                let best = t.best_reward().map(|b| format!("{b:.6e}")).unwrap_or_else(|| "none".into());
                println!("{run_id}: {} evaluations, best reward {best}", t.records.len());
                for f in t.failures.iter().take(3) {
                    eprintln!("{run_id}: evaluation {} failed: {}", f.iter, f.error);
                }
                if t.failures.len() > 3 {
                    eprintln!("{run_id}: {} more failed evaluations in errors.jsonl", t.failures.len() - 3);
                }
            }
            Err(e) => {
                failed += 1;
                eprintln!("{run_id}: error: {e:#}");
            }
        }
    }
    Ok(if failed > 0 { 1 } else { 0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_syntax() {
        assert_eq!(parse_seeds("42").unwrap(), vec![42]);
        assert_eq!(parse_seeds("3,1,2").unwrap(), vec![3, 1, 2]);
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("0..=3").unwrap(), vec![0, 1, 2, 3]);
        assert!(parse_seeds("1,1").is_err());
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn methods_expand() {
        assert_eq!(parse_methods(&["all".into()]).unwrap().len(), 5);
        assert!(parse_methods(&["nelder".into()]).is_err());
    }
}
