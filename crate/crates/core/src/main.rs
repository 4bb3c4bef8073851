use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use dcg::baselines::centralized_greedy;
use dcg::harness::{load_ratings, run_experiment, write_outputs, ExperimentConfig, RunRecord};
use dcg::polytope::FeasibleBody;
use dcg::setfn::facility_location;
use dcg::topology::{load_edge_list, metropolis_weights, validate_weights};

#[derive(Parser)]
#[command(
    name = "dcg",
    version,
    about = "Decentralized continuous greedy simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Single,
    Figure1,
    Figure2,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write runrecord.json, per-cell rounds.csv and plots.
    Run {
        /// JSON configuration; missing fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Starting point when no configuration file is given.
        #[arg(long, value_enum, default_value = "single")]
        preset: Preset,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// `key=value` override of a configuration field; dotted keys reach
        /// nested fields, values are parsed as JSON when possible.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Check Metropolis weights of an edge-list graph and report its spectrum.
    ValidateGraph { edges: PathBuf },
    /// Centralized greedy value of a ratings file under a cardinality cap.
    Greedy {
        ratings: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Summarize the recorded inequality checks of a run record.
    CheckBounds { record: PathBuf },
}

fn run(
    config: Option<PathBuf>,
    preset: Preset,
    out: Option<PathBuf>,
    overrides: Vec<String>,
) -> Result<()> {
    let base = match &config {
        Some(path) => serde_json::from_str(
            &std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?,
        )
        .with_context(|| format!("parsing {}", path.display()))?,
        None => serde_json::to_value(match preset {
            Preset::Single => ExperimentConfig::default(),
            Preset::Figure1 => ExperimentConfig::figure1(),
            Preset::Figure2 => ExperimentConfig::figure2(),
        })?,
    };
    let mut cfg =
        ExperimentConfig::with_overrides(base, &overrides).context("building configuration")?;
    if let Some(out) = out {
        cfg.output_dir = out;
    }
    let record = run_experiment(&cfg).context("running experiment")?;
    write_outputs(&record, &cfg.output_dir)
        .with_context(|| format!("writing outputs to {}", cfg.output_dir.display()))?;
    for cell in &record.cells {
        println!(
            "{}  dist {:.3e}  fractional {:.4}  rounded {:.4}  greedy {:.4}",
            cell.key,
            cell.final_distance_to_average,
            cell.mean_fractional_objective,
            cell.mean_rounded_objective,
            cell.greedy_value
        );
    }
    println!(
        "wrote {} ({} ms)",
        cfg.output_dir.display(),
        record.wall_time_ms
    );
    Ok(())
}

fn validate_graph(path: PathBuf) -> Result<bool> {
    let g = load_edge_list(&path).with_context(|| format!("loading {}", path.display()))?;
    let w = metropolis_weights(&g);
    let report = validate_weights(&w, &g)?;
    let ok = report.assumption1_holds;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "nodes": g.n(),
            "edges": g.edges().len(),
            "connected": g.is_connected(),
            "report": report,
        }))?
    );
    Ok(ok)
}

fn greedy(path: PathBuf, k: usize) -> Result<()> {
    let ratings = load_ratings(&path).with_context(|| format!("loading {}", path.display()))?;
    let users: Vec<usize> = (0..ratings.users()).collect();
    let f = facility_location(&ratings, &users)?;
    let out = centralized_greedy(&f, &FeasibleBody::uniform(ratings.movies(), k))?;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "users": ratings.users(),
            "movies": ratings.movies(),
            "k": k,
            "set": out.set,
            "value": out.value,
        }))?
    );
    Ok(())
}

fn check_bounds(path: PathBuf) -> Result<bool> {
    let text =
        std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let record: RunRecord =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let mut ok = true;
    for cell in &record.cells {
        for check in &cell.lemma_checks {
            ok &= check.holds();
            println!(
                "{:<24} {:<18} max ratio {:.4}  violations {}",
                cell.key, check.name, check.max_ratio, check.violation_count
            );
        }
        ok &= cell.feasible;
        if !cell.feasible {
            println!("{:<24} infeasible iterate recorded", cell.key);
        }
    }
    println!(
        "{}",
        if ok {
            "all bounds hold"
        } else {
            "violations found"
        }
    );
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            preset,
            out,
            overrides,
        } => run(config, preset, out, overrides).map(|_| true),
        Command::ValidateGraph { edges } => validate_graph(edges),
        Command::Greedy { ratings, k } => greedy(ratings, k).map(|_| true),
        Command::CheckBounds { record } => check_bounds(record),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
