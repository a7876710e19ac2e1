use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use chrono::NaiveDate;
use clap::{Parser, Subcommand};
use filing_corpus_cli::checkpoint::{Stage, StageError};
use filing_corpus_cli::config::PipelineConfig;
use filing_corpus_cli::pipeline::{Analysis, Pipeline, RunOptions, StageSummary};

#[derive(Debug, Parser)]
#[command(name = "filing-corpus", version, about = "Rebuild and audit a corpus of EDGAR filings")]
struct Cli {
    /// Pipeline configuration file.
    #[arg(long, global = true, default_value = "filing-corpus.toml")]
    config: PathBuf,
    /// Overrides the dedup and sampling seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Discard this stage's checkpoint and outputs before running.
    #[arg(long, global = true)]
    restart: bool,
    /// Stop after this many new archives (fetch and extract).
    #[arg(long, global = true, hide = true)]
    limit: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Download daily archives into the cache.
    Fetch {
        #[arg(long)]
        from: Option<NaiveDate>,
        #[arg(long)]
        to: Option<NaiveDate>,
    },
    /// Parse submissions and extract document text.
    Extract,
    /// Apply the form and quality filters.
    Clean,
    /// Remove near-duplicate documents.
    Dedup,
    /// Label splits and write shards.
    Split,
    /// Run audit analyses over the final split.
    Audit {
        #[arg(value_enum)]
        analyses: Vec<Analysis>,
    },
    /// Render report tables.
    Report,
    /// Run every stage in order.
    RunAll,
}

fn load(cli: &Cli, from: Option<NaiveDate>, to: Option<NaiveDate>) -> Result<Pipeline> {
    let (mut config, base) = PipelineConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.dedup.seed = seed;
        config.audit.sample_seed = seed;
    }
    if let Some(d) = from {
        config.fetch.from = d;
    }
    if let Some(d) = to {
        config.fetch.to = d;
    }
    Pipeline::new(config, base)
}

fn run(cli: Cli) -> Result<Vec<StageSummary>> {
    let mut options = RunOptions {
        restart: cli.restart,
        limit: cli.limit,
        analyses: Vec::new(),
    };
    let (stage, from, to) = match &cli.command {
        Command::Fetch { from, to } => (Some(Stage::Fetch), *from, *to),
        Command::Extract => (Some(Stage::Extract), None, None),
        Command::Clean => (Some(Stage::Clean), None, None),
        Command::Dedup => (Some(Stage::Dedup), None, None),
        Command::Split => (Some(Stage::Split), None, None),
        Command::Audit { analyses } => {
            options.analyses = analyses.clone();
            (Some(Stage::Audit), None, None)
        }
        Command::Report => (Some(Stage::Report), None, None),
        Command::RunAll => (None, None, None),
    };
    let pipeline = load(&cli, from, to)?;
    match stage {
        Some(stage) => Ok(vec![pipeline.run_stage(stage, &options)?]),
        None => pipeline.run_all(&options),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .json()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(summaries) => {
            for s in &summaries {
                println!("{}", serde_json::to_string(s).expect("summary serializes"));
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let kind = e.downcast_ref::<StageError>().map_or("error", StageError::kind);
            let report = serde_json::json!({
                "error": kind,
                "message": format!("{e:#}"),
            });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
