//! Reference evaluator for the subprocess protocol.
//!
//! Reads one JSON request per line and answers on stdout. With `--task` the
//! reply carries the task's stand-in metrics, so a run through this process
//! matches an in-process run. Without it every numeric parameter is echoed
//! back, along with the operating point fields prefixed `op_` and `f`, the
//! sum of squares of the numeric parameters.
//!
//! The `--*-after N` flags misbehave once N requests have been answered.

use std::io::{self, BufRead, Write};
use std::process::ExitCode;
use std::thread;
use std::time::Duration;

use aerobench::problems::catalog::Catalog;
use aerobench::problems::standin::StandIn;
use aerobench::problems::{MetricSource, OperatingPoint};
use aerobench::space::{DesignPoint, Value as Param};
use clap::Parser;
use serde_json::{json, Map, Value};

#[derive(Parser)]
#[command(name = "aerobench-echo-evaluator")]
struct Args {
    /// Answer with this task's stand-in metrics.
    #[arg(long)]
    task: Option<String>,
    /// Exit with status 3 instead of answering request N+1.
    #[arg(long)]
    crash_after: Option<u64>,
    /// Stop answering after N requests.
    #[arg(long)]
    hang_after: Option<u64>,
    /// Answer with non-JSON text after N requests.
    #[arg(long)]
    garbage_after: Option<u64>,
    /// Answer with an error object after N requests.
    #[arg(long)]
    error_after: Option<u64>,
}

fn echo(params: &Map<String, Value>, op: &Map<String, Value>) -> Map<String, Value> {
    let mut out = Map::new();
    let mut f = 0.0;
    for (k, v) in params {
        if let Some(x) = v.as_f64() {
            f += x * x;
            out.insert(k.clone(), json!(x));
        }
    }
    for (k, v) in op {
        if let Some(x) = v.as_f64() {
            out.insert(format!("op_{k}"), json!(x));
        }
    }
    out.insert("f".into(), json!(f));
    out
}

fn answer(req: &Value, standin: Option<&StandIn>) -> Value {
    let id = req.get("id").cloned().unwrap_or(Value::Null);
    let empty = Map::new();
    let params = req.get("params").and_then(Value::as_object).unwrap_or(&empty);
    let op_raw = req.get("operating_point").and_then(Value::as_object).unwrap_or(&empty);
    let Some(model) = standin else {
        return json!({ "id": id, "metrics": echo(params, op_raw) });
    };
    let op: OperatingPoint = match serde_json::from_value(Value::Object(op_raw.clone())) {
        Ok(op) => op,
        Err(e) => return json!({ "id": id, "error": format!("bad operating point: {e}") }),
    };
    let mut design = DesignPoint::new();
    for (k, v) in params {
        let p = match v {
            Value::String(s) => Param::Label(s.clone()),
            other => match other.as_f64() {
                Some(x) => Param::Real(x),
                None => return json!({ "id": id, "error": format!("parameter `{k}` is neither number nor label") }),
            },
        };
        design.values.insert(k.clone(), p);
    }
    match model.point_metrics(&design, &op) {
        // non-finite metrics cannot travel as JSON numbers
        Ok(m) => match m.iter().find(|(_, x)| !x.is_finite()) {
            Some((k, x)) => json!({ "id": id, "error": format!("metric `{k}` is {x}") }),
            None => json!({ "id": id, "metrics": m }),
        },
        Err(e) => json!({ "id": id, "error": e.to_string() }),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let standin = match &args.task {
        Some(task) => {
            let catalog = match Catalog::from_env() {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            match catalog.task(task).map_err(|e| e.to_string()).and_then(StandIn::for_task) {
                Ok(s) => Some(s),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            }
        }
        None => None,
    };

    let stdin = io::stdin();
    let mut stdout = io::stdout().lock();
    let mut served = 0u64;
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let past = |n: Option<u64>| n.is_some_and(|n| served >= n);
        if past(args.crash_after) {
            return ExitCode::from(3);
        }
        if past(args.hang_after) {
            loop {
                thread::sleep(Duration::from_secs(3600));
            }
        }
        let reply = if past(args.garbage_after) {
            "this is not json".to_string()
        } else {
            match serde_json::from_str::<Value>(&line) {
                Ok(req) if past(args.error_after) => {
                    json!({ "id": req.get("id").cloned().unwrap_or(Value::Null), "error": "injected failure" }).to_string()
                }
                Ok(req) => answer(&req, standin.as_ref()).to_string(),
                Err(e) => json!({ "id": null, "error": format!("request is not JSON: {e}") }).to_string(),
            }
        };
        if writeln!(stdout, "{reply}").and_then(|_| stdout.flush()).is_err() {
            break;
        }
        served += 1;
    }
    ExitCode::SUCCESS
}
