use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser};
use hbem_cli::{configure_threads, run, CommandRegistry, Verdict};

/// Half-space cavity boundary-element runs.
///
/// Exit status: 0 on PASS, 1 on a numerical FAIL, 2 on a configuration error.
#[derive(Parser)]
#[command(name = "hbem", version)]
struct Args {
    /// Command name (see below).
    command: String,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let registry = CommandRegistry::default();
    let matches = Args::command()
        .after_help(format!("Commands:\n{}\n\nHBEM_THREADS sets the worker count.", registry.describe()))
        .get_matches();
    let args = Args::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    let result = configure_threads(std::env::var("HBEM_THREADS").ok().as_deref())
        .and_then(|()| run(&registry, &args.command, &args.config, &args.out));
    match result {
        Ok(verdict) => {
            eprintln!("{} {} -> {}", verdict.as_str(), args.command, args.out.display());
            match verdict {
                Verdict::Pass => ExitCode::SUCCESS,
                Verdict::Fail => ExitCode::from(1),
            }
        }
        Err(e) => {
            eprintln!("hbem: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
