//! The `labelforge` command-line pipeline.

pub mod cli;
pub mod commands;
pub mod config;
pub mod context;
pub mod error;
pub mod review;

use clap::Parser;
use serde_json::Value;

use cli::{Cli, Command};
use commands::{corpus, evaluation, labeling, review as review_cmd};
use config::LoadedConfig;
use context::Context;
use error::CliResult;

/// Runs one parsed invocation and returns its summary.
pub fn run(cli: Cli) -> CliResult<Value> {
    let cfg = LoadedConfig::load(cli.config.as_deref())?.with_seed(cli.seed);
    let mut ctx = Context::new(cfg, cli.dry_run)?;
    match &cli.command {
        Command::Merge(a) => corpus::merge(&mut ctx, a),
        Command::Sample(a) => corpus::sample(&mut ctx, a),
        Command::Screen(a) => review_cmd::screen(&mut ctx, a),
        Command::ReviewServe(a) => review_cmd::review_serve(&mut ctx, a),
        Command::Finalize(a) => review_cmd::finalize(&mut ctx, a),
        Command::Build(a) => labeling::build(&mut ctx, a),
        Command::Annotate(a) => labeling::annotate(&mut ctx, a),
        Command::Evaluate(a) => evaluation::evaluate(&mut ctx, a),
        Command::Analyze(a) => evaluation::analyze(&mut ctx, a),
        Command::Report(a) => evaluation::report(&mut ctx, a),
    }
}

/// Parses `args`, runs, prints the summary to stdout or a one-line JSON error
/// to stderr, and returns the process exit code.
pub fn main_entry<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            e.exit_code()
        }
    }
}
