//! Command-line front end for search-space shrinkage experiments.
//!
//! Subcommands: `gen-synthetic` writes a space spec and benchmark table,
//! `shrink` runs a shrinkage variant, `analyze-locality` measures RWA and
//! the AAD distance table, `compare` contrasts snapshot files, and
//! `report` regenerates a run directory's summary. A master seed (config
//! or `--seed`) makes every output byte-identical across reruns and
//! thread counts.

mod commands;
mod config;
mod svg;

use clap::{Parser, Subcommand};
use commands::{
    cmd_analyze_locality, cmd_compare, cmd_gen_synthetic, cmd_report, cmd_shrink, CommandOutput,
    VariantArg,
};
use config::RunConfig;
use lissnas_core::{Error, Result};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "lissnas", version, about = "Search-space shrinkage experiments")]
struct Cli {
    /// Run configuration JSON; flags below override its fields
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed (required here or in the config)
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Also render SVG plots
    #[arg(long, global = true)]
    plots: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic space spec and its benchmark table
    GenSynthetic,
    /// Run a shrinkage variant; writes snapshot, trace, and summary
    Shrink {
        /// Search variant to run
        #[arg(long, value_enum, default_value_t = VariantArg::Lissnas)]
        variant: VariantArg,
        /// Top fraction kept by naive-topx (default 0.05)
        #[arg(long)]
        x: Option<f64>,
        /// Uniform sample budget for naive-topx (default: initial_sample_size)
        #[arg(long)]
        sample_budget: Option<usize>,
    },
    /// Measure random-walk autocorrelation and the AAD distance table
    AnalyzeLocality,
    /// Compare snapshot CSVs: EDFs, KS tests, diversity, histograms
    Compare {
        #[arg(required = true, num_args = 2.., value_name = "SNAPSHOT_CSV")]
        snapshots: Vec<PathBuf>,
    },
    /// Recompute summary.json for a run directory from its own run.json
    Report {
        /// Run directory (default: the output directory)
        #[arg(value_name = "DIR")]
        run_dir: Option<PathBuf>,
    },
}

/// Maps error kinds to the documented exit codes: 2 config or parse
/// problems, 3 benchmark coverage misses, 4 budget exhaustion before the
/// first pass, 5 degenerate statistics.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::MissingKey(_) => 3,
        Error::BudgetExhausted { .. } => 4,
        Error::ZeroVariance(_)
        | Error::TooFewObservations { .. }
        | Error::NoLegalMove(_)
        | Error::Domain(_)
        | Error::SingularSystem => 5,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<CommandOutput> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = Some(threads);
    }
    if cli.plots {
        cfg.plots = true;
    }
    if let Some(threads) = cfg.threads {
        if threads == 0 {
            return Err(Error::InvalidConfig("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::GenSynthetic => cmd_gen_synthetic(&cfg),
        Command::Shrink {
            variant,
            x,
            sample_budget,
        } => cmd_shrink(&cfg, variant, x, sample_budget),
        Command::AnalyzeLocality => cmd_analyze_locality(&cfg),
        Command::Compare { snapshots } => cmd_compare(&cfg, &snapshots),
        Command::Report { run_dir } => cmd_report(run_dir.as_deref().unwrap_or(&cfg.out)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(output) => {
            for warning in &output.warnings {
                eprintln!("warning: {warning}");
            }
            for (path, bytes) in &output.files {
                if let Some(parent) = path.parent() {
                    if !parent.as_os_str().is_empty() {
                        if let Err(e) = std::fs::create_dir_all(parent) {
                            eprintln!("error: cannot create {}: {e}", parent.display());
                            return ExitCode::from(2);
                        }
                    }
                }
                if let Err(e) = std::fs::write(path, bytes) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            print!("{}", output.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
