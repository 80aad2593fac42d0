//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime or data
//! error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::engine::run_simulation;
use crate::error::Error;
use crate::experiment::run_study;
use crate::io::{load_arms, load_dataset, write_report, write_run_csv, write_steps_csv};
use crate::report::RUNS_FILE;
use crate::types::{ArmTable, Policy, SimConfig, Strategy};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "defect-bandit",
    version,
    about = "Bandit selection of defect prediction models during sequential testing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    Egreedy,
    Ucb,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Sf,
    Lf,
    Pf,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Sf => Strategy::Sf,
            StrategyArg::Lf => Strategy::Lf,
            StrategyArg::Pf => Strategy::Pf,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write its metrics and step log.
    Simulate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        arms: PathBuf,
        #[arg(long, value_enum)]
        policy: PolicyArg,
        /// Exploration probability for egreedy (default 0).
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, value_enum)]
        strategy: StrategyArg,
        #[arg(long)]
        effort_ratio: f64,
        /// Effort per unit of module size.
        #[arg(long = "c", default_value_t = 1.0)]
        c: f64,
        /// Type 2 overlooking probability.
        #[arg(long, default_value_t = 0.2)]
        type2: f64,
        /// Fraction of earliest modules forced positive.
        #[arg(long, default_value_t = 0.1)]
        banp: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a configuration sweep and write the full report.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Maximum worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Summarise a per-run metrics file written by `experiment` or `simulate`.
    Inspect {
        /// Report directory or a runs.csv file.
        path: PathBuf,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_config() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Run(e)
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

#[derive(Serialize)]
struct SimulateRecord<'a> {
    dataset: &'a Path,
    arms: &'a Path,
    seed: u64,
    config: SimConfig,
}

fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Simulate {
            dataset,
            arms,
            policy,
            epsilon,
            strategy,
            effort_ratio,
            c,
            type2,
            banp,
            seed,
            out,
        } => {
            let policy = match (policy, epsilon) {
                (PolicyArg::Ucb, Some(_)) => {
                    return Err(CliError::Usage("--epsilon cannot be used with --policy ucb".into()))
                }
                (PolicyArg::Ucb, None) => Policy::Ucb,
                (PolicyArg::Egreedy, e) => Policy::EpsilonGreedy {
                    epsilon: e.unwrap_or(0.0),
                },
            };
            let config = SimConfig {
                policy,
                strategy: strategy.into(),
                effort_ratio,
                effort_constant: c,
                type2_prob: type2,
                banp_fraction: banp,
                seed,
                repetitions: 1,
            };
            config.validate()?;

            let ds = load_dataset(&dataset)?;
            let arm_list = load_arms(&arms)?;
            let table = ArmTable::align(&ds, &arm_list)?;
            let result = run_simulation(&ds, &arm_list, &config, seed)?;

            fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let name = dataset
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into());
            write_run_csv(&name, &config, &result, out.join(RUNS_FILE))?;
            write_steps_csv(&result, table.names(), out.join("steps.csv"))?;
            let record = SimulateRecord {
                dataset: &dataset,
                arms: &arms,
                seed,
                config,
            };
            let echo = toml::to_string(&record).map_err(|e| CliError::Run(Error::Config(e.to_string())))?;
            let echo_path = out.join("run.toml");
            fs::write(&echo_path, echo).map_err(|e| Error::io(&echo_path, e))?;

            println!("final AUC: {:.4}", result.final_auc_vs_truth);
            println!("total effort: {}", result.total_effort);
            println!("found defects: {}", result.found_defects);
            Ok(())
        }
        Command::Experiment { config, out, jobs } => {
            let cfg = ExperimentConfig::load(&config)?;
            let grid = cfg.grid()?;
            let base = config.parent().map(Path::to_path_buf).unwrap_or_default();
            let inputs = cfg.load_inputs(&base)?;

            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.unwrap_or(0))
                .build()
                .map_err(|e| CliError::Usage(format!("--jobs: {e}")))?;
            let summary = pool.install(|| run_study(&inputs, &grid, cfg.master_seed))?;
            let written = write_report(&summary, &out)?;
            let echo = out.join("experiment.toml");
            fs::copy(&config, &echo).map_err(|e| Error::io(&echo, e))?;

            println!(
                "{} cells x {} repetitions on {} dataset(s)",
                grid.len(),
                cfg.repetitions,
                inputs.len()
            );
            let best = summary.ranking.iter().min_by_key(|r| r.rank);
            if let Some(b) = best {
                println!("best: {} (mean AUC {:.4})", b.label, b.mean_auc);
            }
            println!("benchmark AUC: {:.4}", summary.benchmark_auc);
            println!("wrote {} files to {}", written.len() + 1, out.display());
            Ok(())
        }
        Command::Inspect { path } => {
            let file = if path.is_dir() { path.join(RUNS_FILE) } else { path };
            inspect(&file).map_err(CliError::Run)
        }
    }
}

struct CellStats {
    dataset: String,
    cell: String,
    label: String,
    runs: usize,
    auc: f64,
    effort: f64,
    found: f64,
}

fn inspect(path: &Path) -> Result<(), Error> {
    let parse = |line: u64, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: msg,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => parse(1, format!("{other:?}")),
    })?;
    let header = rdr.headers().map_err(|e| parse(1, e.to_string()))?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse(1, format!("missing column `{name}`")))
    };
    let (c_ds, c_cell, c_pol, c_eps, c_str, c_ratio, c_auc, c_eff, c_found) = (
        col("dataset")?,
        col("cell")?,
        col("policy")?,
        col("epsilon")?,
        col("strategy")?,
        col("effort_ratio")?,
        col("final_auc_vs_truth")?,
        col("total_effort")?,
        col("found_defects")?,
    );

    let mut cells: Vec<CellStats> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse(0, e.to_string()))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let num = |i: usize| -> Result<f64, Error> {
            rec[i]
                .parse::<f64>()
                .map_err(|_| parse(line, format!("invalid number `{}`", &rec[i])))
        };
        let (auc, effort, found) = (num(c_auc)?, num(c_eff)?, num(c_found)?);
        let policy = if rec[c_eps].is_empty() {
            rec[c_pol].to_string()
        } else {
            format!("{}:{}", &rec[c_pol], &rec[c_eps])
        };
        let label = format!("{}/{}/{}", rec[c_str].to_uppercase(), &rec[c_ratio], policy);
        let idx = match cells
            .iter()
            .position(|c| c.dataset == rec[c_ds] && c.cell == rec[c_cell])
        {
            Some(i) => i,
            None => {
                cells.push(CellStats {
                    dataset: rec[c_ds].to_string(),
                    cell: rec[c_cell].to_string(),
                    label,
                    runs: 0,
                    auc: 0.0,
                    effort: 0.0,
                    found: 0.0,
                });
                cells.len() - 1
            }
        };
        let c = &mut cells[idx];
        c.runs += 1;
        c.auc += auc;
        c.effort += effort;
        c.found += found;
    }

    println!(
        "{:<12} {:<24} {:>5} {:>9} {:>14} {:>8}",
        "dataset", "cell", "runs", "mean AUC", "mean effort", "found"
    );
    for c in &cells {
        let n = c.runs as f64;
        println!(
            "{:<12} {:<24} {:>5} {:>9.4} {:>14.1} {:>8.2}",
            c.dataset,
            c.label,
            c.runs,
            c.auc / n,
            c.effort / n,
            c.found / n
        );
    }
    Ok(())
}
