use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use polsym::cli::{error_exit_code, run};
use polsym::config::{parse_config, Command};
use polsym::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Symmetrize,
    Verify,
    Minimize,
    PolyaSzego,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Symmetrize => Command::Symmetrize,
            Cmd::Verify => Command::Verify,
            Cmd::Minimize => Command::Minimize,
            Cmd::PolyaSzego => Command::PolyaSzego,
        }
    }
}

/// Polarizations, Schwarz symmetrization and symmetric minimizers on grids.
///
/// Exit status: 0 when every check passed, 1 when a check failed, 2 on a
/// configuration or I/O error.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    command: Cmd,
    /// `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Io {
            path: args.config.clone(),
            source: e,
        })
        .and_then(|text| parse_config(&text))
        .and_then(|mut cfg| {
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            run(args.command.into(), &cfg, &args.out)
        });
    match result {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(error_exit_code(&err) as u8)
        }
    }
}
