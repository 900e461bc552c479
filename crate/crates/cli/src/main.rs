//! `infodelta` command line: batch analysis, benchmark, decomposition,
//! persistence and credibility tables.
//!
//! Exit status is 0 on success, 1 for invalid input or configuration and 2
//! for I/O failures.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::{Tuning, Window};

#[derive(Parser, Debug)]
#[command(name = "infodelta", version, about = "Detect information voids and overabundance in supply/demand series")]
struct Cli {
    /// Flat TOML file with pipeline settings; flags take precedence.
    #[arg(long, global = true, env = "INFODELTA_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Target {
    Supply,
    Demand,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Policy {
    Lower,
    Nearest,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full pipeline on supply/demand pairs from a long-format CSV.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        /// SUPPLY_ID:DEMAND_ID; repeatable. Without it every supply series is
        /// paired with every demand series of the same region and topic.
        #[arg(long = "pair", value_name = "SUPPLY:DEMAND")]
        pairs: Vec<String>,
        /// Directory for one report per pair. Required for several pairs.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[command(flatten)]
        tuning: Tuning,
        #[command(flatten)]
        window: Window,
    },
    /// Synthetic injection benchmark over a grid of magnitudes.
    Benchmark {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        repetitions: Option<usize>,
        #[arg(long)]
        series_length: Option<usize>,
        #[arg(long)]
        injections: Option<usize>,
        #[arg(long, value_enum)]
        target: Option<Target>,
        /// Days of slack when matching detections to injections.
        #[arg(long)]
        tolerance_days: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Print the STL components of one series as CSV.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        series: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
        #[command(flatten)]
        window: Window,
    },
    /// Persistence runs of a saved JSON report.
    Persistence {
        #[arg(long)]
        report: PathBuf,
        /// Defaults to the value recorded in the report.
        #[arg(long)]
        gap_tolerance: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Credibility of posts per anomaly state and platform.
    Credibility {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long)]
        posts: PathBuf,
        /// Drop posts before this date; defaults to the report's window start.
        #[arg(long)]
        from: Option<chrono::NaiveDate>,
        #[arg(long, value_enum, default_value = "lower")]
        policy: Policy,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Io(String),
}

impl From<infodelta::Error> for Failure {
    fn from(e: infodelta::Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
