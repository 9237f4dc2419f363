//! `peerinfo`: simulate, elicit, classify, cluster, evaluate and verify.
//!
//! Exit status is 0 on success, 1 on any input or validation error and 2
//! when `verify` finds a failing prediction.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use commands::{Ctx, Format, Status};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "peerinfo", version, about = "Peer-information preference toolkit")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configured one.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "PEERINFO_OUT", default_value = ".")]
    out: PathBuf,
    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a population, run the experiment and write worker records.
    Simulate,
    /// Write strategy-method WTP schedules for a population or an agent file.
    Elicit {
        /// JSON lines of agent specifications; defaults to the configured population.
        #[arg(long)]
        agents: Option<PathBuf>,
    },
    /// Assign worker types from a schedule file.
    Classify {
        #[arg(long)]
        schedules: PathBuf,
    },
    /// Cluster an embedding file, choosing k by silhouette.
    Cluster {
        #[arg(long)]
        embeddings: PathBuf,
    },
    /// Compare information policies on worker records.
    Welfare {
        #[arg(long)]
        records: PathBuf,
        /// Type labels overriding those in the records.
        #[arg(long)]
        types: Option<PathBuf>,
    },
    /// Check model predictions over the parameter grid.
    Verify,
    /// Effects, type shares and welfare for worker records.
    Report {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        types: Option<PathBuf>,
        #[arg(long)]
        clusters: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<Status> {
    let ctx = Ctx { cfg: RunConfig::load(cli.config.as_deref(), cli.seed)?, out: cli.out, format: cli.format };
    match &cli.command {
        Command::Simulate => commands::simulate(&ctx),
        Command::Elicit { agents } => commands::elicit(&ctx, agents.as_deref()),
        Command::Classify { schedules } => commands::classify_cmd(&ctx, schedules),
        Command::Cluster { embeddings } => commands::cluster(&ctx, embeddings),
        Command::Welfare { records, types } => commands::welfare(&ctx, records, types.as_deref()),
        Command::Verify => commands::verify(&ctx),
        Command::Report { records, types, clusters } => {
            commands::report(&ctx, records, types.as_deref(), clusters.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::HypothesisFailure) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
