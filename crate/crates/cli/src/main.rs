//! Command-line pipeline for ranking MIDI files by stylistic similarity to
//! a corpus, plus the batch evaluation harnesses.
//!
//! Exit codes: 0 success, 1 usage error, 2 failure (including partial
//! failure where some input files were skipped).

mod commands;
mod config;
mod error;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{CommonArgs, OutputFormat, RunConfig};
use crate::error::{CliError, CliResult, Outcome};

#[derive(Parser)]
#[command(
    name = "stylerank",
    version,
    about = "Rank MIDI files by stylistic similarity to a corpus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract per-file feature distributions as JSON
    Extract {
        /// MIDI files or directories of MIDI files
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Also dump the parsed note list per file
        #[arg(long)]
        dump_notes: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Score and rank candidate files against a corpus
    Rank {
        /// Directory of corpus MIDI files
        #[arg(long)]
        corpus: PathBuf,
        /// Directory of candidate MIDI files
        #[arg(long)]
        candidates: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Partition a rank report by a global-score threshold
    Filter {
        /// A JSON report produced by `rank`
        #[arg(long)]
        report: PathBuf,
        /// Keep candidates scoring at or above this value
        #[arg(long)]
        threshold: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compare several models' sample directories against one corpus
    CompareModels {
        #[arg(long)]
        corpus: PathBuf,
        /// Model output directory (give two or more)
        #[arg(long = "models", required = true)]
        models: Vec<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Two-style discrimination trials with raw-distance baselines
    Experiment1 {
        #[arg(long)]
        style_a: PathBuf,
        #[arg(long)]
        style_b: PathBuf,
        /// Corpus sizes, comma separated
        #[arg(long, value_delimiter = ',', default_value = "10")]
        sizes: Vec<usize>,
        /// Trials per size
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Ranking accuracy against human judgment counts
    Experiment2 {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        generated: PathBuf,
        /// CSV with header sampleId,nMiss,nCorr
        #[arg(long)]
        counts: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Flag and drop near-duplicate files within a directory
    Dedup {
        dir: PathBuf,
        /// Pairs with head or tail distance below this are duplicates
        #[arg(long, default_value_t = 0.75)]
        threshold: f64,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn configure_workers(config: &RunConfig) {
    if let Some(workers) = config.workers {
        // Ignore failure: the global pool can only be set once.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build_global();
    }
}

fn dispatch(cli: Cli) -> CliResult<Outcome> {
    match cli.command {
        Command::Extract { paths, dump_notes, common } => {
            let config = RunConfig::resolve(&common)?;
            configure_workers(&config);
            commands::extract::run(&paths, dump_notes, &config)
        }
        Command::Rank { corpus, candidates, common } => {
            let config = RunConfig::resolve(&common)?;
            configure_workers(&config);
            commands::rank::run(&corpus, &candidates, &config)
        }
        Command::Filter { report, threshold, common } => {
            let config = RunConfig::resolve(&common)?;
            commands::filter::run(&report, threshold, &config)
        }
        Command::CompareModels { corpus, models, common } => {
            let config = RunConfig::resolve(&common)?;
            configure_workers(&config);
            commands::compare::run(&corpus, &models, &config)
        }
        Command::Experiment1 { style_a, style_b, sizes, trials, common } => {
            let config = RunConfig::resolve_with_default_format(&common, OutputFormat::Csv)?;
            configure_workers(&config);
            commands::experiment1::run(&style_a, &style_b, &sizes, trials, &config)
        }
        Command::Experiment2 { corpus, generated, counts, common } => {
            let config = RunConfig::resolve(&common)?;
            configure_workers(&config);
            commands::experiment2::run(&corpus, &generated, &counts, &config)
        }
        Command::Dedup { dir, threshold, common } => {
            let config = RunConfig::resolve_with_default_format(&common, OutputFormat::Csv)?;
            configure_workers(&config);
            commands::dedup::run(&dir, threshold, &config)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(outcome) => ExitCode::from(outcome.exit_code()),
        Err(err @ CliError::Usage(_)) => {
            eprintln!("{err}");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(2)
        }
    }
}
