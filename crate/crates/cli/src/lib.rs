//! Batch front end: every subcommand reads files and writes files.
//!
//! Exit codes are 0 on success, 1 when the inputs were readable but the
//! domain outcome was a failure, and 2 when a required input could not be
//! read or parsed.

pub mod commands;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{CliError, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "ngnbill", version, about = "Rate, bill and settle network usage records")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a tariff plan (and optionally a content catalog).
    Validate {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Generate synthetic usage records and subscriber credentials.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Rate a usage record file.
    Rate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Subscriber credential sets; enables access checks on content views.
        #[arg(long)]
        credentials: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build one invoice per subscriber for a month.
    Bill {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        period: String,
        #[arg(long)]
        out: PathBuf,
        /// Invoice context tags that trigger third-party discounts.
        #[arg(long, value_delimiter = ',')]
        context: Vec<String>,
    },
    /// Total what each operator is owed for a month.
    Settle {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        period: String,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Validate { plan, catalog } => commands::validate(&plan, catalog.as_deref()),
        Command::Simulate { config, out, seed } => commands::simulate(&config, &out, seed),
        Command::Rate {
            input,
            plan,
            catalog,
            credentials,
            out,
        } => commands::rate(&input, &plan, catalog.as_deref(), credentials.as_deref(), &out),
        Command::Bill {
            input,
            plan,
            period,
            out,
            context,
        } => commands::bill(&input, &plan, &period, &out, &context),
        Command::Settle { input, period, out } => commands::settle(&input, &period, &out),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            err.exit_code()
        }
    }
}
