use std::path::{Path, PathBuf};

use aerobench::analytics::{compare as compare_runs, load_runs, Grouping, RunSet};
use anyhow::{bail, Context};

pub fn compare(roots: &[PathBuf], grouping: Grouping, out: &Path, fractions: &[f64]) -> anyhow::Result<u8> {
    let mut runs = Vec::new();
    for root in roots {
        runs.extend(load_runs(root).with_context(|| format!("loading runs under {}", root.display()))?);
    }
    if runs.is_empty() {
        bail!("no runs found");
    }
    let set = RunSet::new(runs)?;
    let c = compare_runs(&set, grouping, fractions)?;
    for w in &c.warnings {
        eprintln!("warning: {w}");
    }
    c.write_dir(out).with_context(|| format!("writing {}", out.display()))?;

    print!("{}", c.table.to_csv());
    match c.mean_rho {
        Some(r) => println!("mean pairwise Spearman rho over {} groups: {r:.3}", c.groups.len()),
        None => println!("mean pairwise Spearman rho: undefined"),
    }
    println!("tables written to {}", out.display());
    Ok(0)
}
