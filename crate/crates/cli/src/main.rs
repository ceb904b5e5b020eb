//! `cwm`: data generation, mining, training, evaluation and reporting.
//!
//! Exit status: 0 on success, 1 on a runtime or data failure, 2 on a usage or
//! validation failure. Log verbosity follows `RUST_LOG` (default `warn`).

mod commands;
mod manifest;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

use commands::UsageError;

#[derive(Parser, Debug)]
#[command(
    name = "cwm",
    version,
    about = "Contrastive action-feasibility scorer on a micro text-world"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate episodes and write them as JSONL.
    GenData(commands::GenData),
    /// Mine typed negatives into training instances.
    Mine(commands::Mine),
    /// Build the three-category intrinsic test set from held-out episodes.
    BuildTestset(commands::BuildTestset),
    /// Train a scorer checkpoint.
    Train(commands::Train),
    /// Score the intrinsic test set with one system.
    EvalIntrinsic(commands::EvalIntrinsic),
    /// Teacher-forced candidate ranking over rollout episodes.
    EvalFilter(commands::EvalFilter),
    /// Render report JSON files as aligned text tables.
    Report(commands::Report),
    /// Run every stage end to end.
    Pipeline(commands::Pipeline),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::GenData(a) => commands::gen_data(&a).map(drop),
        Command::Mine(a) => commands::mine(&a).map(drop),
        Command::BuildTestset(a) => commands::build_testset(&a).map(drop),
        Command::Train(a) => commands::train_cmd(&a).map(drop),
        Command::EvalIntrinsic(a) => commands::eval_intrinsic_cmd(&a).map(drop),
        Command::EvalFilter(a) => commands::eval_filter_cmd(&a).map(drop),
        Command::Report(a) => commands::report(&a).map(drop),
        Command::Pipeline(a) => {
            let out = commands::pipeline(&a)?;
            println!(
                "pipeline: tables in {} and {}",
                out.intrinsic_table.display(),
                out.filter_table.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
