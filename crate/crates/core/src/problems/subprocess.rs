//! External evaluators speaking line-delimited JSON over stdin/stdout.
//!
//! Request: `{"id": "<n>", "params": {...}, "operating_point": {...}}`.
//! Reply: `{"id": "<n>", "metrics": {...}}` or `{"id": "<n>", "error": "..."}`.
//!
//! One request is in flight at a time. A crash, timeout or malformed reply
//! becomes an [`EvalError`] and the worker is discarded; the next request
//! starts a fresh process.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};

use super::{EvalError, MetricSource, Metrics, OperatingPoint};
use crate::space::DesignPoint;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(300);

struct Worker {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Worker {
    fn spawn(argv: &[String]) -> Result<Self, EvalError> {
        let (program, args) = argv.split_first().ok_or_else(|| EvalError::Evaluator("empty command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| EvalError::Evaluator(format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self { child, stdin, lines: rx })
    }

    fn exit_message(&mut self) -> String {
        // give the process a moment to be reaped after closing stdout
        for _ in 0..50 {
            if let Ok(Some(status)) = self.child.try_wait() {
                return format!("evaluator exited with {status}");
            }
            thread::sleep(Duration::from_millis(10));
        }
        "evaluator closed its output".into()
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Metric source backed by an external process.
pub struct SubprocessSource {
    argv: Vec<String>,
    timeout: Duration,
    worker: Mutex<Option<Worker>>,
    next_id: Mutex<u64>,
}

impl SubprocessSource {
    pub fn new(argv: Vec<String>) -> Self {
        Self { argv, timeout: DEFAULT_TIMEOUT, worker: Mutex::new(None), next_id: Mutex::new(0) }
    }

    /// Parses a command line with shell-style quoting.
    pub fn from_command_line(line: &str) -> Result<Self, EvalError> {
        let argv = shlex::split(line).ok_or_else(|| EvalError::Evaluator(format!("cannot parse command `{line}`")))?;
        if argv.is_empty() {
            return Err(EvalError::Evaluator("empty command".into()));
        }
        Ok(Self::new(argv))
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    fn request(worker: &mut Worker, id: &str, line: &str, timeout: Duration) -> Result<Metrics, EvalError> {
        if writeln!(worker.stdin, "{line}").and_then(|_| worker.stdin.flush()).is_err() {
            return Err(EvalError::Evaluator(worker.exit_message()));
        }
        let reply = match worker.lines.recv_timeout(timeout) {
            Ok(Ok(reply)) => reply,
            Ok(Err(e)) => return Err(EvalError::Protocol(format!("unreadable reply: {e}"))),
            Err(RecvTimeoutError::Timeout) => return Err(EvalError::Timeout(timeout.as_secs_f64())),
            Err(RecvTimeoutError::Disconnected) => return Err(EvalError::Evaluator(worker.exit_message())),
        };
        parse_reply(&reply, id)
    }
}

fn parse_reply(reply: &str, id: &str) -> Result<Metrics, EvalError> {
    let v: Value = serde_json::from_str(reply).map_err(|e| EvalError::Protocol(format!("reply is not JSON: {e}")))?;
    let got = v.get("id").and_then(Value::as_str);
    if got != Some(id) {
        return Err(EvalError::Protocol(format!("reply id {got:?} does not match request `{id}`")));
    }
    if let Some(err) = v.get("error") {
        let msg = err.as_str().map(str::to_string).unwrap_or_else(|| err.to_string());
        return Err(EvalError::Evaluator(msg));
    }
    let obj = v
        .get("metrics")
        .and_then(Value::as_object)
        .ok_or_else(|| EvalError::Protocol("reply has neither `metrics` nor `error`".into()))?;
    obj.iter()
        .map(|(k, x)| {
            x.as_f64()
                .map(|f| (k.clone(), f))
                .ok_or_else(|| EvalError::Protocol(format!("metric `{k}` is not a number")))
        })
        .collect()
}

impl MetricSource for SubprocessSource {
    fn point_metrics(&self, design: &DesignPoint, op: &OperatingPoint) -> Result<Metrics, EvalError> {
        let id = {
            let mut n = self.next_id.lock().expect("id lock");
            *n += 1;
            n.to_string()
        };
        let params: serde_json::Map<String, Value> =
            design.values.iter().map(|(k, v)| (k.clone(), serde_json::to_value(v).expect("value"))).collect();
        let line = json!({ "id": id, "params": params, "operating_point": op }).to_string();

        let mut guard = self.worker.lock().unwrap_or_else(|p| p.into_inner());
        if guard.is_none() {
            *guard = Some(Worker::spawn(&self.argv)?);
        }
        let worker = guard.as_mut().expect("worker present");
        let out = Self::request(worker, &id, &line, self.timeout);
        if out.is_err() {
            // never reuse a worker whose stream position is unknown
            *guard = None;
        }
        out
    }

    fn describe(&self) -> String {
        format!("subprocess `{}`", self.argv.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reply_parsing() {
        let m = parse_reply(r#"{"id":"3","metrics":{"CL":0.5,"CD":0.01}}"#, "3").unwrap();
        assert_eq!(m["CL"], 0.5);
        assert!(matches!(parse_reply(r#"{"id":"4","metrics":{}}"#, "3"), Err(EvalError::Protocol(_))));
        assert!(matches!(parse_reply(r#"{"id":"3","error":"diverged"}"#, "3"), Err(EvalError::Evaluator(m)) if m == "diverged"));
        assert!(matches!(parse_reply("garbage", "3"), Err(EvalError::Protocol(_))));
        assert!(matches!(parse_reply(r#"{"id":"3","metrics":{"CL":"x"}}"#, "3"), Err(EvalError::Protocol(_))));
        assert!(matches!(parse_reply(r#"{"id":"3"}"#, "3"), Err(EvalError::Protocol(_))));
    }

    #[test]
    fn missing_program_is_an_error() {
        let s = SubprocessSource::new(vec!["/nonexistent/evaluator".into()]);
        let r = s.point_metrics(&DesignPoint::new(), &OperatingPoint::at_alpha(1.0));
        assert!(matches!(r, Err(EvalError::Evaluator(_))));
    }
}
