//! `aerobench` command-line front end.
//!
//! Exit codes: 0 success, 1 failure or bad input. `diagnose` also returns
//! 2 when the worst check is a warning or missing and 3 for an issue or
//! error.

mod compare;
mod diagnose;
mod list;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use aerobench::analytics::Grouping;
use aerobench::problems::catalog::Catalog;
use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "aerobench", version, about = "Benchmark optimizers on aerodynamic design tasks")]
struct Cli {
    /// Catalogue JSON to use instead of the built-in one (also AEROBENCH_CATALOG).
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List catalogue tasks.
    List {
        /// Keep tasks matching KEY=VALUE (keys: id, family, environment, kind, sense).
        #[arg(long = "filter", value_name = "KEY=VALUE")]
        filters: Vec<String>,
        #[arg(long)]
        json: bool,
    },
    /// Run methods on tasks over a grid of seeds.
    Run(run::RunArgs),
    /// Rank methods across finished runs.
    Compare {
        /// Directories searched for run outputs.
        #[arg(required = true)]
        roots: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "task")]
        group_by: GroupBy,
        /// Output directory for the tables.
        #[arg(long, default_value = "comparison")]
        out: PathBuf,
        /// Budget fractions, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.4,0.6,0.8,1.0")]
        fractions: Vec<f64>,
    },
    /// Check one design and write an evidence bundle.
    Diagnose(diagnose::DiagnoseArgs),
    /// Catalogue utilities.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    /// Write the catalogue as JSON.
    Export {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print one task as JSON.
    Show { task: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupBy {
    Task,
    Environment,
}

impl From<GroupBy> for Grouping {
    fn from(g: GroupBy) -> Self {
        match g {
            GroupBy::Task => Grouping::Task,
            GroupBy::Environment => Grouping::Environment,
        }
    }
}

fn load_catalog(path: &Option<PathBuf>) -> anyhow::Result<Catalog> {
    match path {
        Some(p) => Catalog::load(p).with_context(|| format!("loading {}", p.display())),
        None => Catalog::from_env().context("loading catalogue"),
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<u8> {
    let catalog = load_catalog(&cli.catalog)?;
    match cli.command {
        Command::List { filters, json } => list::list(&catalog, &filters, json),
        Command::Run(args) => run::run(&catalog, args),
        Command::Compare { roots, group_by, out, fractions } => compare::compare(&roots, group_by.into(), &out, &fractions),
        Command::Diagnose(args) => diagnose::diagnose(&catalog, args),
        Command::Catalog { action } => match action {
            CatalogAction::Export { out } => {
                let text = catalog.to_json();
                match out {
                    Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                    None => println!("{text}"),
                }
                Ok(0)
            }
            CatalogAction::Show { task } => {
                let spec = catalog.task(&task)?;
                println!("{}", serde_json::to_string_pretty(spec)?);
                Ok(0)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // keep exit code 2 for diagnostics warnings
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
