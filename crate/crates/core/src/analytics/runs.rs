use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{best_so_far_at, mean_pairwise_spearman, median_iqr, normalized_rank, spearman_shared, AnalyticsError};
use crate::optimizers::read_results;
use crate::problems::Sense;

pub const DEFAULT_FRACTIONS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];

/// Points of the convergence series.
const CONVERGENCE_POINTS: usize = 20;

/// One seed of one method on one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub task: String,
    pub environment: String,
    pub method: String,
    pub seed: u64,
    pub budget: usize,
    /// Per-evaluation rewards in order; failures are `-inf`.
    pub rewards: Vec<f64>,
}

/// A checked collection of runs.
#[derive(Debug, Clone, Default)]
pub struct RunSet {
    runs: Vec<RunRecord>,
}

impl RunSet {
    /// Checks that each task has one budget and one environment and that
    /// seeds are distinct per task and method.
    pub fn new(runs: Vec<RunRecord>) -> Result<Self, AnalyticsError> {
        let mut budget: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for r in &runs {
            if r.rewards.is_empty() {
                return Err(AnalyticsError::Inconsistent(format!(
                    "{}/{}/seed{} has no evaluations",
                    r.task, r.method, r.seed
                )));
            }
            let entry = budget.entry(&r.task).or_insert((r.budget, &r.environment));
            if *entry != (r.budget, r.environment.as_str()) {
                return Err(AnalyticsError::Inconsistent(format!(
                    "task {} mixes budgets or environments",
                    r.task
                )));
            }
            if !seen.insert((&r.task, &r.method, r.seed)) {
                return Err(AnalyticsError::Inconsistent(format!(
                    "seed {} repeated for {}/{}",
                    r.seed, r.task, r.method
                )));
            }
        }
        Ok(Self { runs })
    }

    pub fn runs(&self) -> &[RunRecord] {
        &self.runs
    }

    /// Methods in order of first appearance.
    pub fn methods(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.runs {
            if !out.contains(&r.method) {
                out.push(r.method.clone());
            }
        }
        out
    }

    /// Tasks in sorted order.
    pub fn tasks(&self) -> Vec<String> {
        self.runs.iter().map(|r| r.task.clone()).collect::<BTreeSet<_>>().into_iter().collect()
    }

    fn environment_of(&self, task: &str) -> &str {
        &self.runs.iter().find(|r| r.task == task).expect("task present").environment
    }

    fn seeds(&self, task: &str, method: &str) -> impl Iterator<Item = &RunRecord> {
        let (task, method) = (task.to_string(), method.to_string());
        self.runs.iter().filter(move |r| r.task == task && r.method == method)
    }

    /// Median over seeds of the best reward within `fraction` of the budget.
    /// `None` when the method has no run on the task.
    pub fn task_value(&self, task: &str, method: &str, fraction: f64) -> Result<Option<f64>, AnalyticsError> {
        let vals: Vec<f64> = self
            .seeds(task, method)
            .map(|r| best_so_far_at(&r.rewards, r.budget, fraction))
            .collect::<Result<_, _>>()?;
        if vals.is_empty() {
            return Ok(None);
        }
        Ok(Some(median_iqr(&vals)?.0))
    }
}

/// Reads every run directory below `root`: a `results.csv` next to a
/// `resolved_config.json`.
pub fn load_runs(root: &Path) -> Result<Vec<RunRecord>, AnalyticsError> {
    let mut out = Vec::new();
    let mut dirs: Vec<PathBuf> = walkdir::WalkDir::new(root)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_name() == "results.csv")
        .filter_map(|e| e.path().parent().map(Path::to_path_buf))
        .collect();
    dirs.sort();
    for dir in dirs {
        let config_path = dir.join("resolved_config.json");
        let Ok(text) = fs::read_to_string(&config_path) else { continue };
        let config: Value = serde_json::from_str(&text)
            .map_err(|e| AnalyticsError::Load(format!("{}: {e}", config_path.display())))?;
        let field = |k: &str| {
            config.get(k).ok_or_else(|| AnalyticsError::Load(format!("{}: missing `{k}`", config_path.display())))
        };
        let str_field = |k: &str| -> Result<String, AnalyticsError> {
            field(k)?.as_str().map(str::to_string).ok_or_else(|| AnalyticsError::Load(format!("`{k}` is not a string")))
        };
        let int_field = |k: &str| -> Result<u64, AnalyticsError> {
            field(k)?.as_u64().ok_or_else(|| AnalyticsError::Load(format!("`{k}` is not an integer")))
        };
        let task = str_field("task")?;
        let records =
            read_results(&dir.join("results.csv")).map_err(|e| AnalyticsError::Load(e.to_string()))?;
        if records.is_empty() {
            continue;
        }
        out.push(RunRecord {
            environment: str_field("environment").unwrap_or_else(|_| task.clone()),
            task,
            method: str_field("method")?,
            seed: int_field("seed")?,
            budget: int_field("budget")? as usize,
            rewards: records.iter().map(|r| r.reward).collect(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flag {
    /// Run but never produced a finite reward.
    #[serde(rename = "DNC")]
    DidNotComplete,
    /// Not run on this task or group.
    #[serde(rename = "N/A")]
    NotApplicable,
}

impl Flag {
    pub fn label(self) -> &'static str {
        match self {
            Flag::DidNotComplete => "DNC",
            Flag::NotApplicable => "N/A",
        }
    }
}

/// A method's normalized rank in one group. Flagged methods rank last.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub rank: f64,
    pub flag: Option<Flag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grouping {
    Task,
    Environment,
}

/// Median and quartiles of normalized rank per method and budget fraction,
/// taken over groups where the method is not flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub fractions: Vec<f64>,
    pub methods: Vec<String>,
    /// `cells[m][f]`: `(median, q25, q75, groups used)`; `None` when every
    /// group flags the method.
    pub cells: Vec<Vec<Option<(f64, f64, f64, usize)>>>,
}

impl RankTable {
    /// Rows are methods, columns budget fractions, cells `median ± IQR`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["method".to_string()];
        header.extend(self.fractions.iter().map(|f| format!("{}%", (f * 100.0).round())));
        w.write_record(&header).expect("in-memory write");
        for (m, row) in self.methods.iter().zip(&self.cells) {
            let mut rec = vec![m.clone()];
            rec.extend(row.iter().map(|c| match c {
                Some((med, q25, q75, _)) => format!("{med:.3} ± {:.3}", q75 - q25),
                None => "N/A".to_string(),
            }));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// Long form: one row per method and fraction.
    pub fn to_long_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["method", "fraction", "median", "q25", "q75", "groups"]).expect("in-memory write");
        for (m, row) in self.methods.iter().zip(&self.cells) {
            for (f, c) in self.fractions.iter().zip(row) {
                let rec = match c {
                    Some((med, q25, q75, n)) => {
                        vec![m.clone(), f.to_string(), med.to_string(), q25.to_string(), q75.to_string(), n.to_string()]
                    }
                    None => vec![m.clone(), f.to_string(), String::new(), String::new(), String::new(), "0".into()],
                };
                w.write_record(&rec).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Everything `compare` produces.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub grouping: Grouping,
    pub groups: Vec<String>,
    /// `per_group[f][g]`: method → cell at fraction `f` in group `g`.
    pub per_group: Vec<Vec<IndexMap<String, Cell>>>,
    pub table: RankTable,
    /// ρ between group rankings at the final fraction; `None` where undefined.
    pub rho: Vec<Vec<Option<f64>>>,
    pub mean_rho: Option<f64>,
    /// `(task, method, fraction, median, q25, q75)` of best-so-far reward over seeds.
    pub convergence: Vec<(String, String, f64, f64, f64, f64)>,
    pub warnings: Vec<String>,
}

/// Ranks methods per task from task values at `fraction`.
fn task_cells(runs: &RunSet, task: &str, methods: &[String], fraction: f64) -> Result<IndexMap<String, Cell>, AnalyticsError> {
    let mut finite = IndexMap::new();
    let mut flags = IndexMap::new();
    for m in methods {
        match runs.task_value(task, m, fraction)? {
            None => {
                flags.insert(m.clone(), Flag::NotApplicable);
            }
            Some(v) if !v.is_finite() => {
                flags.insert(m.clone(), Flag::DidNotComplete);
            }
            Some(v) => {
                finite.insert(m.clone(), v);
            }
        }
    }
    let ranks = if finite.is_empty() { IndexMap::new() } else { normalized_rank(&finite, Sense::Maximize)? };
    Ok(methods
        .iter()
        .map(|m| {
            let cell = match flags.get(m) {
                Some(f) => Cell { rank: 1.0, flag: Some(*f) },
                None => Cell { rank: ranks[m], flag: None },
            };
            (m.clone(), cell)
        })
        .collect())
}

/// Folds task cells of one environment: mean rank over unflagged tasks,
/// then renormalized across methods.
fn environment_cells(task_cells: &[&IndexMap<String, Cell>], methods: &[String]) -> Result<IndexMap<String, Cell>, AnalyticsError> {
    let mut means = IndexMap::new();
    let mut flags = IndexMap::new();
    for m in methods {
        let ranks: Vec<f64> = task_cells.iter().map(|c| c[m]).filter(|c| c.flag.is_none()).map(|c| c.rank).collect();
        if ranks.is_empty() {
            let applicable = task_cells.iter().any(|c| c[m].flag != Some(Flag::NotApplicable));
            flags.insert(m.clone(), if applicable { Flag::DidNotComplete } else { Flag::NotApplicable });
        } else {
            means.insert(m.clone(), ranks.iter().sum::<f64>() / ranks.len() as f64);
        }
    }
    let ranks = if means.is_empty() { IndexMap::new() } else { normalized_rank(&means, Sense::Minimize)? };
    Ok(methods
        .iter()
        .map(|m| {
            let cell = match flags.get(m) {
                Some(f) => Cell { rank: 1.0, flag: Some(*f) },
                None => Cell { rank: ranks[m], flag: None },
            };
            (m.clone(), cell)
        })
        .collect())
}

/// Rank tables, rank correlations and convergence series for a run set.
pub fn compare(runs: &RunSet, grouping: Grouping, fractions: &[f64]) -> Result<Comparison, AnalyticsError> {
    if runs.runs().is_empty() {
        return Err(AnalyticsError::NoValues);
    }
    if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
        return Err(AnalyticsError::BadFraction(*f));
    }
    let methods = runs.methods();
    let tasks = runs.tasks();
    let mut warnings = Vec::new();
    if methods.len() < 2 {
        warnings.push("only one method: every normalized rank is 0.5".to_string());
    }
    let shared = tasks.iter().any(|t| methods.iter().filter(|m| runs.seeds(t, m).next().is_some()).count() >= 2);
    if methods.len() >= 2 && !shared {
        return Err(AnalyticsError::Inconsistent("no task has runs from two methods".into()));
    }

    let groups: Vec<String> = match grouping {
        Grouping::Task => tasks.clone(),
        Grouping::Environment => {
            tasks.iter().map(|t| runs.environment_of(t).to_string()).collect::<BTreeSet<_>>().into_iter().collect()
        }
    };

    let mut per_group = Vec::with_capacity(fractions.len());
    for &f in fractions {
        let by_task: Vec<IndexMap<String, Cell>> =
            tasks.iter().map(|t| task_cells(runs, t, &methods, f)).collect::<Result<_, _>>()?;
        let cells = match grouping {
            Grouping::Task => by_task,
            Grouping::Environment => groups
                .iter()
                .map(|g| {
                    let members: Vec<&IndexMap<String, Cell>> =
                        tasks.iter().zip(&by_task).filter(|(t, _)| runs.environment_of(t) == g).map(|(_, c)| c).collect();
                    environment_cells(&members, &methods)
                })
                .collect::<Result<_, _>>()?,
        };
        per_group.push(cells);
    }

    let mut table = RankTable { fractions: fractions.to_vec(), methods: methods.clone(), cells: Vec::new() };
    for m in &methods {
        let mut row = Vec::new();
        for cells in &per_group {
            let vals: Vec<f64> = cells.iter().map(|c| c[m]).filter(|c| c.flag.is_none()).map(|c| c.rank).collect();
            row.push(median_iqr(&vals).ok().map(|(a, b, c)| (a, b, c, vals.len())));
        }
        table.cells.push(row);
    }

    let (rho, mean_rho) = match per_group.last() {
        Some(last) => {
            let rankings: Vec<IndexMap<String, f64>> = last
                .iter()
                .map(|cells| cells.iter().filter(|(_, c)| c.flag.is_none()).map(|(m, c)| (m.clone(), c.rank)).collect())
                .collect();
            let rho = rankings.iter().map(|a| rankings.iter().map(|b| spearman_shared(a, b)).collect()).collect();
            let mean = mean_pairwise_spearman(&rankings).ok();
            if mean.is_none() {
                warnings.push("no pair of groups has a defined rank correlation".to_string());
            }
            (rho, mean)
        }
        None => (Vec::new(), None),
    };

    let mut convergence = Vec::new();
    for t in &tasks {
        for m in &methods {
            let seeds: Vec<&RunRecord> = runs.seeds(t, m).collect();
            if seeds.is_empty() {
                continue;
            }
            for k in 1..=CONVERGENCE_POINTS {
                let f = k as f64 / CONVERGENCE_POINTS as f64;
                let vals: Vec<f64> =
                    seeds.iter().map(|r| best_so_far_at(&r.rewards, r.budget, f)).collect::<Result<_, _>>()?;
                let (med, q25, q75) = median_iqr(&vals)?;
                convergence.push((t.clone(), m.clone(), f, med, q25, q75));
            }
        }
    }

    Ok(Comparison { grouping, groups, per_group, table, rho, mean_rho, convergence, warnings })
}

impl Comparison {
    /// Per-group cells at every fraction, flags spelled out.
    pub fn group_ranks_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["group", "method", "fraction", "rank", "flag"]).expect("in-memory write");
        for (f, cells) in self.table.fractions.iter().zip(&self.per_group) {
            for (g, group) in self.groups.iter().zip(cells) {
                for (m, c) in group {
                    let flag = c.flag.map(Flag::label).unwrap_or("");
                    w.write_record([g.as_str(), m, &f.to_string(), &c.rank.to_string(), flag]).expect("in-memory write");
                }
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// Symmetric ρ matrix; undefined entries are empty.
    pub fn rho_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::new()];
        header.extend(self.groups.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (g, row) in self.groups.iter().zip(&self.rho) {
            let mut rec = vec![g.clone()];
            rec.extend(row.iter().map(|r| r.map(|x| x.to_string()).unwrap_or_default()));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn convergence_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["task", "method", "fraction", "median", "q25", "q75"]).expect("in-memory write");
        for (t, m, f, med, q25, q75) in &self.convergence {
            w.write_record([t, m, &f.to_string(), &med.to_string(), &q25.to_string(), &q75.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// Writes the tables into `dir` and returns the paths written.
    pub fn write_dir(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let files = [
            ("rank_table.csv", self.table.to_csv()),
            ("rank_trajectory.csv", self.table.to_long_csv()),
            ("group_ranks.csv", self.group_ranks_csv()),
            ("spearman.csv", self.rho_csv()),
            ("convergence.csv", self.convergence_csv()),
        ];
        let mut out = Vec::new();
        for (name, text) in files {
            let p = dir.join(name);
            fs::write(&p, text)?;
            out.push(p);
        }
        let summary = serde_json::json!({
            "grouping": self.grouping,
            "groups": self.groups,
            "mean_pairwise_spearman": self.mean_rho,
            "warnings": self.warnings,
        });
        let p = dir.join("summary.json");
        fs::write(&p, serde_json::to_string_pretty(&summary).expect("serializable"))?;
        out.push(p);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(task: &str, env: &str, method: &str, seed: u64, rewards: &[f64]) -> RunRecord {
        RunRecord {
            task: task.into(),
            environment: env.into(),
            method: method.into(),
            seed,
            budget: rewards.len(),
            rewards: rewards.to_vec(),
        }
    }

    #[test]
    fn known_ordering_gives_known_ranks() {
        let runs = RunSet::new(vec![
            run("t1", "e", "a", 0, &[1.0, 5.0]),
            run("t1", "e", "b", 0, &[2.0, 3.0]),
            run("t1", "e", "c", 0, &[0.0, 1.0]),
            run("t2", "e", "a", 0, &[0.0, 0.0]),
            run("t2", "e", "b", 0, &[4.0, 4.0]),
            run("t2", "e", "c", 0, &[f64::NEG_INFINITY, f64::NEG_INFINITY]),
        ])
        .unwrap();
        let c = compare(&runs, Grouping::Task, &[0.5, 1.0]).unwrap();
        // t1 at 50%: b 2 > a 1 > c 0
        assert_eq!(c.per_group[0][0]["b"].rank, 0.0);
        assert_eq!(c.per_group[0][0]["a"].rank, 0.5);
        // t2: c never finite, ranked last with a flag
        assert_eq!(c.per_group[1][1]["c"], Cell { rank: 1.0, flag: Some(Flag::DidNotComplete) });
        assert_eq!(c.per_group[1][1]["b"].rank, 0.0);
        assert_eq!(c.per_group[1][1]["a"].rank, 1.0);
        // method a at 100%: ranks 0 (t1) and 1 (t2)
        assert_eq!(c.table.cells[0][1], Some((0.5, 0.25, 0.75, 2)));
        assert!(c.table.to_csv().contains("0.500 ± 0.500"));

        let e = compare(&runs, Grouping::Environment, &[1.0]).unwrap();
        assert_eq!(e.groups, vec!["e".to_string()]);
        // b ranks 0.5 on t1 and 0 on t2: best mean
        assert_eq!(e.per_group[0][0]["b"].rank, 0.0);
    }

    #[test]
    fn rejects_inconsistent_sets() {
        assert!(RunSet::new(vec![run("t", "e", "a", 1, &[1.0]), run("t", "e", "a", 1, &[2.0])]).is_err());
        assert!(RunSet::new(vec![run("t", "e", "a", 1, &[1.0]), run("t", "e", "b", 1, &[2.0, 3.0])]).is_err());
        let disjoint = RunSet::new(vec![run("t", "e", "a", 1, &[1.0]), run("u", "e", "b", 1, &[2.0])]).unwrap();
        assert!(compare(&disjoint, Grouping::Task, &DEFAULT_FRACTIONS).is_err());
    }

    #[test]
    fn single_method_is_flat() {
        let runs = RunSet::new(vec![run("t", "e", "a", 1, &[1.0, 2.0])]).unwrap();
        let c = compare(&runs, Grouping::Task, &DEFAULT_FRACTIONS).unwrap();
        assert!(c.table.cells[0].iter().all(|x| x.unwrap().0 == 0.5));
        assert_eq!(c.warnings.len(), 2);
    }

    #[test]
    fn missing_method_is_not_applicable() {
        let runs = RunSet::new(vec![
            run("t", "e", "a", 1, &[1.0]),
            run("t", "e", "b", 1, &[2.0]),
            run("u", "e", "a", 1, &[1.0]),
        ])
        .unwrap();
        let c = compare(&runs, Grouping::Task, &[1.0]).unwrap();
        assert_eq!(c.per_group[0][1]["b"].flag, Some(Flag::NotApplicable));
        assert!(c.group_ranks_csv().contains("N/A"));
    }
}
