//! `repairkit` command-line tool.

mod backend;
mod cmd;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use repairkit_core::decode::DecodeError;

#[derive(Debug, Parser)]
#[command(
    name = "repairkit",
    version,
    about = "Repair-pair corpora, masks, triage and draft-verified decoding"
)]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for `dataset` and `bench`.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the loss mask of one buggy/fixed pair.
    Mask(cmd::mask::Args),
    /// Pair, filter and export a submission archive.
    Dataset(cmd::dataset::Args),
    /// Compile and test a submission, then label its bug type.
    Triage(cmd::triage::Args),
    /// Decode a repair with a mock backend.
    Repair(cmd::repair::Args),
    /// Compare plain and accelerated decoding over a corpus.
    Bench(cmd::bench::Args),
    /// Write synthetic buggy/fixed pairs.
    Synth(cmd::synth::Args),
}

/// Settings shared by every subcommand.
pub struct Global {
    pub seed: u64,
    pub json: bool,
    pub config: config::FileConfig,
}

/// Input that leaves nothing to compute (exit code 2).
#[derive(Debug)]
pub struct Degenerate(pub String);

impl std::fmt::Display for Degenerate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Degenerate {}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()?;
    }
    let g = Global {
        seed: cli.seed,
        json: cli.json,
        config: config::FileConfig::load(cli.config.as_deref())?,
    };
    match cli.command {
        Command::Mask(a) => cmd::mask::run(&g, a),
        Command::Dataset(a) => cmd::dataset::run(&g, a),
        Command::Triage(a) => cmd::triage::run(&g, a),
        Command::Repair(a) => cmd::repair::run(&g, a),
        Command::Bench(a) => cmd::bench::run(&g, a),
        Command::Synth(a) => cmd::synth::run(&g, a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Degenerate>() {
            return 2;
        }
        if let Some(DecodeError::BackendContract { .. }) = cause.downcast_ref::<DecodeError>() {
            return 3;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn exit_codes_follow_the_cause_chain() {
        let degenerate: anyhow::Result<()> = Err(Degenerate("empty".into()).into());
        assert_eq!(exit_code(&degenerate.context("mask").unwrap_err()), 2);

        let contract = DecodeError::BackendContract {
            position: 3,
            expected: 1,
            got: 2,
        };
        let err = Err::<(), _>(contract).context("repair").unwrap_err();
        assert_eq!(exit_code(&err), 3);

        assert_eq!(exit_code(&anyhow::anyhow!("io")), 1);
    }
}
