//! `hallrate` command-line pipeline.
//!
//! Stages exchange JSONL files; every artifact gets a `<output>.config.json`
//! sidecar holding the exact arguments that produced it.

mod analyze;
mod annotate;
mod args;
mod estimate;
mod io;
mod plot;
mod synthetic;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

/// Bad arguments or unusable paths; exits with 1 rather than 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub type CmdResult = anyhow::Result<()>;

fn dispatch(cli: &Cli) -> CmdResult {
    log::debug!("running `{}`", cli.command.name());
    cli.check_paths()?;
    match &cli.command {
        Command::Parse(a) => annotate::parse(cli, a),
        Command::Project(a) => annotate::project(cli, a),
        Command::Score(a) => annotate::score(cli, a),
        Command::Iaa(a) => annotate::iaa(cli, a),
        Command::Adjudicate(a) => annotate::adjudicate(cli, a),
        Command::Inject(a) => synthetic::inject(cli, a),
        Command::Simulate(a) => synthetic::simulate(cli, a),
        Command::Validate(a) => synthetic::validate(cli, a),
        Command::Count(a) => estimate::count(cli, a),
        Command::Estimate(a) => estimate::estimate(cli, a),
        Command::Filter(a) => estimate::filter(cli, a),
        Command::Analyze(a) => analyze::run(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Debug } else { log::LevelFilter::Warn })
        .parse_default_env()
        .init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}\n\nUsage: hallrate <COMMAND> [OPTIONS]; see `hallrate --help`");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
