//! Experiment configuration and the `modwave` subcommands.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use modwave_core::dsl::bundled_tables;

pub use config::{CostSection, Experiment, ExperimentConfig, GeneratorSection};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "modwave", version, about = "Modulation formula workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and check every formula of a corpus.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Corpus CSV (`id,name,formula`); overrides the config.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Run one scheme through synthesis, channel and metrics.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scheme: Option<String>,
    },
    /// Compare every configured scheme under one channel.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Generate and validate candidate formulas.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Number of candidates.
        #[arg(long)]
        n: Option<usize>,
        /// Evaluate the formulas that pass validation.
        #[arg(long)]
        evaluate: bool,
        /// External generator endpoint.
        #[arg(long, env = modwave_genlab::ENDPOINT_ENV)]
        endpoint: Option<String>,
    },
    /// Latency and power model.
    Cost {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common, required: bool) -> Result<Option<Experiment>, CliError> {
    let Some(path) = &common.config else {
        return if required {
            Err(CliError::Config("--config is required".into()))
        } else {
            Ok(None)
        };
    };
    let mut exp = Experiment::load(path)?;
    if let Some(seed) = common.seed {
        exp.config.seed = seed;
    }
    Ok(Some(exp))
}

/// Runs a parsed command and returns what to print on success.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Validate { common, corpus } => {
            let exp = load(&common, false)?;
            let entries = match (&corpus, &exp) {
                (Some(p), _) => commands::load_corpus_file(p)?,
                (None, Some(e)) => e.corpus()?,
                (None, None) => bundled_tables(),
            };
            let out = commands::default_out(common.out, exp.as_ref());
            commands::cmd_validate(&entries, &out)
        }
        Command::Eval { common, scheme } => {
            let exp = load(&common, true)?.expect("required");
            let out = commands::default_out(common.out, Some(&exp));
            commands::cmd_eval(&exp, scheme.as_deref(), &out)
        }
        Command::Compare { common } => {
            let exp = load(&common, true)?.expect("required");
            let out = commands::default_out(common.out, Some(&exp));
            commands::cmd_compare(&exp, &out).map(|(csv, _)| csv)
        }
        Command::Generate {
            common,
            n,
            evaluate,
            endpoint,
        } => {
            let exp = load(&common, true)?.expect("required");
            let out = commands::default_out(common.out, Some(&exp));
            commands::cmd_generate(&exp, n, evaluate, endpoint.as_deref(), &out)
        }
        Command::Cost { common } => {
            let exp = load(&common, true)?.expect("required");
            let out = commands::default_out(common.out, Some(&exp));
            commands::cmd_cost(&exp, &out)
        }
    }
}
