//! `topohash`: generate, train, hash, measure, cluster and evaluate.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use topohash::Error;

use args::{Cli, Command};

/// Exit status for each class of failure.
fn exit_code(err: &anyhow::Error) -> u8 {
    let Some(mut e) = err.chain().find_map(|c| c.downcast_ref::<Error>()) else {
        return if err.chain().any(|c| c.is::<std::io::Error>()) { 4 } else { 1 };
    };
    while let Error::Pair { source, .. } = e {
        e = source;
    }
    match e {
        Error::Format { .. }
        | Error::InvalidPoint { .. }
        | Error::Json { .. }
        | Error::OutOfRange { .. }
        | Error::DegenerateRange(_) => 3,
        Error::Io { .. } => 4,
        Error::Version { .. } | Error::Checksum | Error::Corrupt(_) => 5,
        Error::Parameter(_) | Error::Dimension(_) => 6,
        Error::Diverged { .. } | Error::ZeroMass => 7,
        Error::Pair { .. } => 1,
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Gen(a) => commands::gen(a, cli.seed),
        Command::Train(a) => commands::train(a, cli.seed),
        Command::Hash(a) => commands::hash(a),
        Command::Distmat(a) => commands::distmat(a),
        Command::Cluster(a) => commands::cluster(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Scatter(a) => commands::scatter(a),
        Command::Protocol(a) => commands::protocol(a, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.threads {
        Some(0) => Err(anyhow::anyhow!(Error::Parameter("--threads must be at least 1".into()))),
        Some(n) => topohash::par::with_threads(n, || run(&cli)),
        None => run(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
