mod commands;
mod config;
mod http;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Parser, Subcommand};

use commands::{Classify, CliError, CliResult, Exit};
use config::{Overrides, RunConfig};

/// Metamorphic test generation by sentence disassembly and reassembly.
#[derive(Debug, Parser)]
#[command(name = "sentasm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a derivation template for every corpus sentence.
    Disassemble,
    /// Build derivation trees and a test suite for the task.
    Generate,
    /// Run a generated suite against the model endpoint.
    Test {
        /// Suite to run [default: <out>/suite.<task>.jsonl].
        #[arg(long)]
        suite: Option<PathBuf>,
    },
    /// Summarize labeled bug reports.
    Report {
        /// Report file [default: <out>/reports.<task>.jsonl].
        #[arg(long)]
        reports: Option<PathBuf>,
        /// `report_id,verdict` CSV with TP or FP per report.
        #[arg(long)]
        verdicts: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = RunConfig::load(&cli.overrides).or_exit(Exit::Usage)?;
    cfg.validate().or_exit(Exit::Usage)?;
    match cli.command {
        Command::Disassemble => commands::disassemble_cmd(&cfg).map(drop),
        Command::Generate => commands::generate_cmd(&cfg).map(drop),
        Command::Test { suite } => commands::test_cmd(&cfg, suite.as_deref()).map(drop),
        Command::Report { reports, verdicts } => {
            let reports = match reports {
                Some(p) => p,
                None => {
                    let task = cfg
                        .task
                        .ok_or_else(|| anyhow!("give --reports or --task"))
                        .or_exit(Exit::Usage)?;
                    cfg.output(&format!("reports.{task}.jsonl"))
                }
            };
            commands::report_cmd(&reports, verdicts.as_deref()).map(drop)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(Exit::Usage as u8) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError { exit, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(exit as u8)
        }
    }
}
