mod args;
mod commands;
mod config;
mod io;
mod selftest;

use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Context;

/// Why a run stopped. Configuration problems exit with 1, bad data with 2.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Data(String),
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure::Config(message.into())
    }

    pub fn data(message: impl Into<String>) -> Self {
        Failure::Data(message.into())
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::Config(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Data(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Data(m) => write!(f, "data error: {m}"),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(g.parallelism as usize)
        .build()
        .map_err(|e| Failure::config(format!("cannot start {} workers: {e}", g.parallelism)))?;
    let ctx = Context { seed: g.seed, strict: g.strict, pool };
    let report = match &cli.command {
        Command::Ingest(a) => commands::ingest(&ctx, a),
        Command::Stats(a) => commands::stats(&ctx, a),
        Command::MatchKelm(a) => commands::match_kelm(&ctx, a),
        Command::Mask(a) => commands::mask(&ctx, a),
        Command::Mix(a) => commands::mix(&ctx, a),
        Command::MatchQa(a) => commands::match_qa(&ctx, a),
        Command::Split(a) => commands::split(&ctx, a),
        Command::Score(a) => commands::score(&ctx, a),
        Command::Delta(a) => commands::delta(&ctx, a),
        Command::Selftest => commands::selftest(&ctx),
    }?;
    let report = serde_json::json!({ "command": cli.command.name(), "seed": g.seed, "report": report });
    match &g.report {
        Some(path) => {
            let mut out = io::Output::create(path)?;
            out.write_line(&serde_json::to_string_pretty(&report).expect("report is plain JSON"))?;
            out.commit()
        }
        None => {
            eprintln!("{report}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let argv = match config::merge(std::env::args_os().collect()) {
        Ok(argv) => argv,
        Err(e) => {
            eprintln!("configuration error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.exit_code())
        }
    }
}
