//! End-to-end acceptance checks. Prints one PASS or FAIL line per
//! criterion and exits nonzero if any fails.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use aerobench::analytics::{normalized_rank, spearman_rho};
use aerobench::diagnostics::{build_report, run_checks, DiagnosticInputs, Status};
use aerobench::optimizers::{
    fd_gradient, pso_coefficients, run_with_budget, EvolveSettings, Exhausted, Method, MethodSettings, OptimizerConfig,
};
use aerobench::problems::catalog::{Catalog, BWB_CL_TARGETS};
use aerobench::problems::formulas::{bisect_alpha_to_cl, car_drag_coefficient, penalized_reward, reynolds_schedule, FormulaError};
use aerobench::problems::pareto::{pareto_front, Sense};
use aerobench::problems::standin::StandIn;
use aerobench::problems::subprocess::SubprocessSource;
use aerobench::problems::{EvalError, MetricSource, OperatingPoint, ProblemEnvironment};
use aerobench::rng;
use aerobench::space::{DesignPoint, Value as Param};
use indexmap::IndexMap;
use rand::Rng;
use serde_json::Value;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn env(task: &str) -> ProblemEnvironment {
    ProblemEnvironment::standin(Arc::new(Catalog::builtin().task(task).unwrap().clone())).unwrap()
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn golden_diagnostics() -> Outcome {
    let start = Instant::now();
    let task = Catalog::builtin().task("car_cd").unwrap().clone();
    let text = fs::read_to_string(fixtures().join("car_snapshot.json")).map_err(|e| e.to_string())?;
    let inputs: DiagnosticInputs = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let all_present = |_: &str| true;
    let b = run_checks(&task, &inputs, &all_present);
    let report = build_report(&task, &inputs, &all_present, None).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let tol = 1e-9;
    let num = |v: &Value| v.as_f64().unwrap_or(f64::NAN);
    let g001 = b.check("G001").ok_or("no G001")?;
    let keys: BTreeSet<&str> =
        g001.value["near_bound_keys"].as_array().ok_or("G001 keys")?.iter().filter_map(Value::as_str).collect();
    let expected_keys: BTreeSet<&str> = [
        "car_size", "car_len", "front_bumper_length", "wind_screen_x", "wind_screen_z", "side_mirrors_z",
        "rear_window_x", "rear_window_z", "trunklid_angle", "trunklid_x", "trunklid_z", "diffusor_angle",
        "car_green_house_angle", "car_front_hood_angle", "car_air_intake_angle", "tires_diameter",
    ]
    .into();
    ensure!(keys == expected_keys, "G001 keys {keys:?}");
    ensure!(close(num(&g001.value["near_bound_fraction"]), 0.8, tol), "G001 fraction {}", g001.value);
    ensure!(close(g001.severity, 0.9, tol), "G001 severity {}", g001.severity);

    let g002 = b.check("G002").ok_or("no G002")?;
    ensure!(close(num(&g002.value["combined_abs_angle_sum"]), 47.121438172129935, tol), "G002 {}", g002.value);
    ensure!(close(g002.severity, 0.9061815033101911, tol), "G002 severity {}", g002.severity);

    let g003 = b.check("G003").ok_or("no G003")?;
    ensure!(close(num(&g003.value["coupling_score"]), 2.4024288886953036, tol), "G003 {}", g003.value);
    ensure!(close(g003.severity, 0.8008096295651012, tol), "G003 severity {}", g003.severity);

    let a001 = b.check("A001").ok_or("no A001")?;
    ensure!(num(&a001.value["rel_err"]) == 0.0, "A001 {}", a001.value);
    ensure!(inputs.metrics["drag_pressure"] == 120.70740509033203, "pressure part");
    ensure!(inputs.metrics["drag_shear"] == 33.71821975708008, "shear part");
    ensure!(num(&a001.value["drag"]) == 154.4256248474121, "A001 drag {}", a001.value);
    let cd = car_drag_coefficient(120.70740509033203, 33.71821975708008);
    ensure!(close(cd, 0.06515849149679837, tol), "Cd {cd}");

    let s = &b.summary;
    ensure!(s.feasibility.get(Status::Ok) == 6 && s.feasibility.ok == 6, "feasibility {:?}", s.feasibility);
    ensure!(s.geometry.warning == 3 && s.geometry.ok == 0, "geometry {:?}", s.geometry);
    ensure!(s.aero.ok == 4, "aero {:?}", s.aero);
    for c in b.checks() {
        let want = if c.check_id.starts_with('G') { Status::Warning } else { Status::Ok };
        ensure!(c.status == want, "{} is {}", c.check_id, c.status);
    }
    ensure!(report.evidence_bundle == b, "report bundle differs from the checks");
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("{elapsed:.1?}"))
}

/// Global minimiser of the Forrester function on [0, 1] by dense search.
fn forrester_argmin() -> f64 {
    let f = |x: f64| (6.0 * x - 2.0).powi(2) * (12.0 * x - 4.0).sin();
    let n = 1_000_000;
    (0..=n).map(|i| i as f64 / n as f64).min_by(|a, b| f(*a).total_cmp(&f(*b))).unwrap()
}

fn sanity_suite() -> Outcome {
    let start = Instant::now();
    let best_f = |task: &str, config: OptimizerConfig| -> Result<f64, String> {
        let t = run_with_budget(&env(task), &config).map_err(|e| e.to_string())?;
        Ok(-t.best_reward().ok_or("no evaluations")?)
    };
    let mut notes = Vec::new();
    for m in [Method::Cmaes, Method::Pso] {
        let mut worst = 0.0f64;
        for seed in 0..10 {
            worst = worst.max(best_f("sphere_10d", OptimizerConfig::new(m, 5000, seed))?);
        }
        ensure!(worst <= 1e-3, "{m} sphere worst best {worst:e}");
        notes.push(format!("{m} {worst:.1e}"));
    }
    let mut worst = 0.0f64;
    for seed in 0..10 {
        worst = worst.max(best_f("quadratic_10d", OptimizerConfig::new(Method::Lbfgsb, 5000, seed))?);
    }
    ensure!(worst <= 1e-6, "lbfgsb quadratic worst best {worst:e}");
    notes.push(format!("lbfgsb {worst:.1e}"));

    let decay = MethodSettings::Evolve(EvolveSettings { gaussian_decay: true, ..EvolveSettings::default() });
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let config = OptimizerConfig::new(Method::Evolve, 5000, seed).with_settings(decay.clone());
        worst = worst.max(best_f("sphere_10d", config)?);
    }
    ensure!(worst <= 1e-2, "evolve sphere worst best {worst:e}");
    notes.push(format!("evolve {worst:.1e}"));

    let x_star = forrester_argmin();
    let mut hits = 0;
    for seed in 0..20 {
        let t = run_with_budget(&env("forrester_1d"), &OptimizerConfig::new(Method::Bo, 60, seed)).map_err(|e| e.to_string())?;
        let best = t.best.ok_or("bo found nothing")?;
        let x = best.design.values.values().next().and_then(Param::as_real).ok_or("bo design")?;
        if (x - x_star).abs() <= 0.05 {
            hits += 1;
        }
    }
    ensure!(hits >= 18, "bo found the global basin in {hits}/20 seeds");
    notes.push(format!("bo {hits}/20"));

    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(120), "suite took {elapsed:?}");
    Ok(format!("{}; {elapsed:.1?}", notes.join(", ")))
}

fn budget_protocol() -> Outcome {
    let tasks = ["sphere_10d", "rosenbrock_2d", "airfoil_ld", "bwb_cfx", "ceras_fuel", "delta_wing_mission_mo", "car_cd"];
    let mut combos = 0;
    for task in tasks {
        for m in Method::ALL {
            for (budget, n_warm) in [(1, 0), (2, 2), (37, 3)] {
                let e = env(task);
                let warm = e.space().sample_uniform(17, n_warm);
                let config = OptimizerConfig::new(m, budget, 5).with_warmstart(warm);
                let t = run_with_budget(&e, &config).map_err(|err| format!("{m} on {task}: {err}"))?;
                let counted = e.evaluation_count() as usize;
                ensure!(counted <= budget, "{m} on {task}: {counted} evaluations for budget {budget}");
                ensure!(counted == t.records.len(), "{m} on {task}: counter {counted}, trajectory {}", t.records.len());
            }
            combos += 1;
        }
    }
    ensure!(combos == 35, "{combos} combinations");
    Ok(format!("{combos} method x task combinations, 3 budgets each"))
}

fn schedules_and_formulas() -> Outcome {
    let total = 1000;
    ensure!(pso_coefficients(0, total) == (0.8, 1.5, 0.2), "t=0 {:?}", pso_coefficients(0, total));
    ensure!(pso_coefficients(total / 2, total) == (0.5, 1.0, 1.6), "t=T/2 {:?}", pso_coefficients(total / 2, total));
    ensure!(pso_coefficients(total, total) == (0.2, 0.5, 3.0), "t=T {:?}", pso_coefficients(total, total));
    let re = reynolds_schedule(1.25).map_err(|e| e.to_string())?;
    ensure!(re == 500_000.0, "Re(1.25) = {re}");
    let re = reynolds_schedule(0.8).map_err(|e| e.to_string())?;
    ensure!(((re - 625_000.0) / 625_000.0).abs() <= 1e-6, "Re(0.8) = {re}");
    let r = penalized_reward(300.0, [("v", 1.0)], 500.0).map_err(|e| e.to_string())?;
    ensure!(r == -200.0, "penalized_reward = {r}");
    Ok("exact".into())
}

fn bisection() -> Outcome {
    let task = Catalog::builtin().task("bwb_cfx").unwrap().clone();
    let solve = task.alpha_solve.ok_or("bwb has no alpha solve")?;
    ensure!((solve.lo, solve.hi, solve.iters) == (-5.0, 12.0, 8), "alpha solve {solve:?}");
    let targets: Vec<f64> = task.points.iter().filter_map(|p| p.cl_target).collect();
    ensure!(targets == BWB_CL_TARGETS && targets == [0.185, 0.206, 0.206, 0.206, 0.227], "targets {targets:?}");
    let bound = 17.0 / 256.0;
    let mut worst = 0.0f64;
    // several lift slopes and zero-lift angles, all bracketing the targets
    for (slope, alpha0) in [(0.1, -1.0), (0.11, 0.0), (0.03, -4.0), (0.05, 2.0), (0.2, 0.5)] {
        for &target in &targets {
            let cl = |a: f64| -> Result<f64, FormulaError> { Ok(slope * (a - alpha0)) };
            let star = alpha0 + target / slope;
            let sol = bisect_alpha_to_cl(cl, target, -5.0, 12.0, 8).map_err(|e| e.to_string())?;
            ensure!(sol.bracketed, "target {target} not bracketed");
            worst = worst.max((sol.alpha - star).abs());
        }
    }
    ensure!(worst <= bound, "worst error {worst}");
    Ok(format!("worst |alpha - alpha*| = {worst:.4} deg"))
}

fn rank_oracle(values: &[f64]) -> Vec<f64> {
    // average 0-based position among equal values, then scaled to [0, 1]
    let n = values.len();
    let pos: Vec<f64> = values
        .iter()
        .map(|v| {
            let below = values.iter().filter(|w| *w < v).count() as f64;
            let equal = values.iter().filter(|w| *w == v).count() as f64;
            below + (equal - 1.0) / 2.0
        })
        .collect();
    if n == 1 {
        return vec![0.5];
    }
    let (lo, hi) = pos.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
    if hi == lo {
        return vec![0.5; n];
    }
    pos.iter().map(|p| (p - lo) / (hi - lo)).collect()
}

fn oracle_front(points: &[Vec<f64>], senses: &[Sense]) -> Vec<usize> {
    let at_least = |a: f64, b: f64, s: Sense| if s == Sense::Maximize { a >= b } else { a <= b };
    (0..points.len())
        .filter(|&i| {
            !(0..points.len()).any(|j| {
                let all = (0..senses.len()).all(|k| at_least(points[j][k], points[i][k], senses[k]));
                let some = (0..senses.len()).any(|k| !at_least(points[i][k], points[j][k], senses[k]));
                all && some
            })
        })
        .collect()
}

fn analytics_oracles() -> Outcome {
    let tol = 1e-12;
    let a = [1.0, 2.0, 3.0, 4.0];
    let rho = |x: &[f64], y: &[f64]| spearman_rho(x, y).ok_or_else(|| "undefined rho".to_string());
    ensure!(close(rho(&a, &a)?, 1.0, tol), "identity");
    ensure!(close(rho(&a, &[4.0, 3.0, 2.0, 1.0])?, -1.0, tol), "reversal");
    ensure!(close(rho(&a, &[1.0, 3.0, 2.0, 4.0])?, 0.8, tol), "swap");

    let mut r = rng::stream(2024, 0);
    for _ in 0..1000 {
        let n = r.random_range(1..=12);
        // small integer grid so ties occur
        let values: Vec<f64> = (0..n).map(|_| r.random_range(0..8) as f64).collect();
        let keyed = |vals: &[f64]| -> IndexMap<String, f64> {
            vals.iter().enumerate().map(|(i, v)| (format!("m{i}"), *v)).collect()
        };
        let base = normalized_rank(&keyed(&values), Sense::Maximize).map_err(|e| e.to_string())?;
        let oracle = rank_oracle(&values);
        for (i, (_, got)) in base.iter().enumerate() {
            // maximize: the best method gets 0
            let want = 1.0 - oracle[i];
            ensure!(close(*got, want, 1e-12), "rank {values:?}: {got} vs {want}");
        }
        let shift = r.random_range(-5.0..5.0);
        let scale = r.random_range(0.1..10.0);
        let transforms: [&dyn Fn(f64) -> f64; 3] = [&|x| (x / 3.0).exp(), &|x| x.powi(3) * scale + shift, &|x| (x + 1.0).ln()];
        for t in transforms {
            let moved: Vec<f64> = values.iter().map(|x| t(*x)).collect();
            let again = normalized_rank(&keyed(&moved), Sense::Maximize).map_err(|e| e.to_string())?;
            ensure!(again == base, "monotone transform changed ranks for {values:?}");
        }
    }

    for case in 0..1000 {
        let n = r.random_range(1..=200);
        let m = r.random_range(1..=4);
        let senses: Vec<Sense> = (0..m).map(|_| if r.random() { Sense::Maximize } else { Sense::Minimize }).collect();
        let coarse = case % 2 == 0;
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| if coarse { r.random_range(0..5) as f64 } else { r.random_range(-1.0..1.0) }).collect())
            .collect();
        let got = pareto_front(&points, &senses).map_err(|e| e.to_string())?;
        ensure!(got == oracle_front(&points, &senses), "pareto mismatch on instance {case}");
    }
    Ok("spearman, 1000 rank instances, 1000 pareto instances".into())
}

fn gradient_check() -> Outcome {
    let cat = Catalog::builtin();
    let eps = 1e-6;
    let mut worst = 0.0f64;
    let mut checked = 0;
    for task in &cat.tasks {
        let standin = StandIn::for_task(task)?;
        let dim = task.space.relaxed_dim();
        let mut r = rng::stream(77, 0);
        let points: Vec<Vec<f64>> = (0..100).map(|_| (0..dim).map(|_| r.random_range(0.001..0.999)).collect()).collect();
        let e = ProblemEnvironment::standin(Arc::new(task.clone()))?;
        let analytic_reward = e.reward_gradient(&points[0]).is_some();
        ensure!(analytic_reward || !standin.landscapes().is_empty(), "{} has no analytic gradient", task.id);
        for z in &points {
            for l in standin.landscapes() {
                let (_, g) = l.value_and_gradient(z);
                let fd = fd_gradient(|p| Ok::<_, Exhausted>(l.value(p)), z, eps).map_err(|e| e.to_string())?;
                worst = worst.max(g.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
            }
            if analytic_reward {
                let g = e.reward_gradient(z).ok_or("gradient vanished")?;
                let fd = fd_gradient(
                    |p| {
                        let d = e.space().denormalize(p).expect("cube point");
                        Ok::<_, Exhausted>(e.evaluate(&d).map(|r| r.reward).unwrap_or(f64::NAN))
                    },
                    z,
                    eps,
                )
                .map_err(|e| e.to_string())?;
                worst = worst.max(g.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
            }
        }
        ensure!(worst <= 1e-5, "{}: max-abs error {worst:e}", task.id);
        checked += 1;
    }
    Ok(format!("{checked} tasks x 100 points, max-abs error {worst:.1e}"))
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aerobench"))
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let tasks = ["ceras_fuel", "bwb_cfx"];
    for pass in ["a", "b"] {
        let out = cli()
            .args(["run", "--task", &tasks.join(","), "--method", "all", "--seeds", "3", "--budget", "40", "--out"])
            .arg(dir.path().join(pass))
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(out.status.success(), "run failed: {}", String::from_utf8_lossy(&out.stderr));
    }
    for task in tasks {
        for m in Method::ALL {
            let rel = Path::new(task).join(m.name()).join("seed3").join("results.csv");
            let a = fs::read(dir.path().join("a").join(&rel)).map_err(|e| e.to_string())?;
            let b = fs::read(dir.path().join("b").join(&rel)).map_err(|e| e.to_string())?;
            ensure!(!a.is_empty() && a == b, "{} differs", rel.display());
        }
    }
    Ok(format!("{} tasks x {} methods byte-identical", tasks.len(), Method::ALL.len()))
}

fn echo_command(extra: &[&str]) -> Vec<String> {
    let mut argv = vec![env!("CARGO_BIN_EXE_aerobench-echo-evaluator").to_string()];
    argv.extend(extra.iter().map(|s| s.to_string()));
    argv
}

fn subprocess_protocol() -> Outcome {
    let source = SubprocessSource::new(echo_command(&[])).with_timeout(Duration::from_secs(30));
    let mut r = rng::stream(99, 0);
    for k in 0..1000 {
        let x: Vec<f64> = (0..3).map(|_| r.random_range(-10.0..10.0)).collect();
        let design = DesignPoint::new().with("a", x[0]).with("b", x[1]).with("c", x[2]).with("shape", Param::Label("ogive".into()));
        let op = OperatingPoint::at_alpha(k as f64 * 0.01).mach(0.3);
        let m = source.point_metrics(&design, &op).map_err(|e| format!("request {k}: {e}"))?;
        ensure!(m["a"] == x[0] && m["b"] == x[1] && m["c"] == x[2], "request {k}: echo {m:?}");
        ensure!(m["op_alpha"] == op.alpha.unwrap() && m["op_mach"] == 0.3, "request {k}: operating point {m:?}");
        let f: f64 = x.iter().map(|v| v * v).sum();
        ensure!(m["f"] == f, "request {k}: f");
    }

    // a crashing evaluator degrades to failed evaluations, never a panic
    let spec = Arc::new(Catalog::builtin().task("sphere_10d").unwrap().clone());
    let crashing = SubprocessSource::new(echo_command(&["--crash-after", "4"]));
    let e = ProblemEnvironment::new(spec.clone(), Arc::new(crashing));
    let config = OptimizerConfig::new(Method::Pso, 40, 0);
    let t = panic::catch_unwind(AssertUnwindSafe(|| run_with_budget(&e, &config)))
        .map_err(|_| "run panicked".to_string())?
        .map_err(|e| e.to_string())?;
    ensure!(t.records.len() == 40 && e.evaluation_count() == 40, "{} records", t.records.len());
    ensure!(!t.failures.is_empty() && t.failures.iter().all(|f| f.error.contains("exited")), "failures {:?}", t.failures);
    let failed: Vec<usize> = t.failures.iter().map(|f| f.iter).collect();
    ensure!(failed.iter().all(|i| t.records[i - 1].reward == f64::NEG_INFINITY), "failed rows not marked");

    let hanging = SubprocessSource::new(echo_command(&["--hang-after", "1"])).with_timeout(Duration::from_millis(300));
    let err = hanging.point_metrics(&DesignPoint::new().with("a", 1.0), &OperatingPoint::at_alpha(0.0));
    ensure!(err.is_ok(), "first request should succeed: {err:?}");
    let err = hanging.point_metrics(&DesignPoint::new().with("a", 1.0), &OperatingPoint::at_alpha(0.0));
    ensure!(matches!(err, Err(EvalError::Timeout(_))), "hang gave {err:?}");

    let garbage = SubprocessSource::new(echo_command(&["--garbage-after", "0"]));
    let err = garbage.point_metrics(&DesignPoint::new().with("a", 1.0), &OperatingPoint::at_alpha(0.0));
    ensure!(matches!(err, Err(EvalError::Protocol(_))), "garbage gave {err:?}");
    Ok(format!("1000 round trips; crash run recorded {} failed evaluations", t.failures.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("diagnostic golden reproduction", golden_diagnostics),
        ("optimizer sanity suite", sanity_suite),
        ("budget protocol", budget_protocol),
        ("schedules and formulas", schedules_and_formulas),
        ("bisection", bisection),
        ("analytics oracles", analytics_oracles),
        ("gradient check", gradient_check),
        ("reproducibility", reproducibility),
        ("subprocess protocol", subprocess_protocol),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS {}: {name} ({detail})", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}: {name}: {why}", k + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
