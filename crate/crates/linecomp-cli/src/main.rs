//! `linecomp`: full-line Python completion from the command line.
//!
//! Subcommands cover the whole pipeline: `prep` turns a corpus into
//! training streams, `train` fits a model, `eval` scores checkpoints,
//! `complete` proposes lines, and `bench` times the decoder.
//!
//! Exit codes: 0 success, 1 user error (flags, paths), 2 data error
//! (unreadable or mismatched inputs), 3 training divergence.

mod bench_cmd;
mod complete_cmd;
mod config;
mod corpus;
mod error;
mod eval_cmd;
mod prep;
mod train_cmd;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

#[derive(Parser)]
#[command(
    name = "linecomp",
    version,
    about = "Full-line Python code completion: prep, train, eval, complete, bench.",
    after_help = "Set LINECOMP_THREADS to cap worker parallelism."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Tokenize a corpus, split it, and write training artifacts.
    Prep(prep::PrepArgs),
    /// Train a model on a prepared directory.
    Train(train_cmd::TrainArgs),
    /// Score checkpoints on held-out completion samples.
    Eval(eval_cmd::EvalArgs),
    /// Propose full next lines after a prefix.
    Complete(complete_cmd::CompleteArgs),
    /// Time completion latency per checkpoint.
    Bench(bench_cmd::BenchArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_threads();
    let result = match &cli.command {
        Command::Prep(args) => prep::run(args),
        Command::Train(args) => train_cmd::run(args),
        Command::Eval(args) => eval_cmd::run(args),
        Command::Complete(args) => complete_cmd::run(args),
        Command::Bench(args) => bench_cmd::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Honors `LINECOMP_THREADS` before any worker pool spins up.
fn init_threads() {
    let Ok(raw) = std::env::var("LINECOMP_THREADS") else {
        return;
    };
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        _ => eprintln!("ignoring LINECOMP_THREADS={raw}: expected a positive integer"),
    }
}
