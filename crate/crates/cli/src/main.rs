//! Command-line front end for the task allocation simulator.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::Context;
use clap::{Parser, Subcommand};
use orgsim::harness::{load_dataset, run_grid, write_report, GridConfig, RunOptions};
use orgsim::{build_pattern_seeded, PatternId};

#[derive(Parser)]
#[command(name = "orgsim", version, about = "Bottom-up task allocation on NK landscapes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario of a configuration grid.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for the CSV files.
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides `master_seed` from the config file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Summarize a run directory into performance, swap and modularity tables.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        /// Where to write the tables; defaults to the input directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print an interaction pattern in the matrix text format.
    Pattern {
        #[arg(long)]
        show: String,
        /// Seed for the random patterns.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Failures that map to exit code 1.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn classify(e: orgsim::Error) -> anyhow::Error {
    if e.is_config() {
        ConfigError(e.to_string()).into()
    } else {
        e.into()
    }
}

fn execute(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Run { config, out, workers, seed } => {
            let mut grid = GridConfig::from_file(&config).map_err(classify)?;
            if let Some(seed) = seed {
                grid.base.master_seed = seed;
            }
            if workers == Some(0) {
                return Err(ConfigError("--workers must be at least 1".into()).into());
            }
            grid.validate().map_err(classify)?;
            log::info!("running {} scenarios x {} runs", grid.scenario_count(), grid.base.runs);
            let dataset = run_grid(&grid, &RunOptions { workers, out_dir: Some(out.clone()) })
                .map_err(classify)
                .with_context(|| format!("running {}", config.display()))?;
            println!("{} runs written to {}", dataset.runs.len(), out.display());
        }
        Command::Report { input, out } => {
            let dataset = load_dataset(&input).with_context(|| format!("reading {}", input.display()))?;
            let out = out.unwrap_or(input);
            write_report(&dataset, &out)?;
            println!("report for {} runs written to {}", dataset.runs.len(), out.display());
        }
        Command::Pattern { show, seed } => {
            let pattern = PatternId::from_str(&show).map_err(classify)?;
            let matrix = build_pattern_seeded(pattern, seed).map_err(classify)?;
            print!("{}", matrix.to_text());
        }
    }
    Ok(())
}

/// The error chain on one line, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut message = e.to_string();
    for cause in e.chain().skip(1) {
        let text = cause.to_string();
        if !message.contains(&text) {
            message.push_str(": ");
            message.push_str(&text);
        }
    }
    message
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
