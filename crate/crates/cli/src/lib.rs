//! Batch driver for `hbem-core`: a JSON run configuration in, a CSV result
//! table with a JSON metadata line out.

pub mod commands;
pub mod config;
pub mod table;

use std::path::Path;

pub use commands::{Command, CommandRegistry};
pub use config::RunConfig;
pub use table::{ResultTable, Verdict};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numeric(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}

/// Run `command` on the config at `config_path`, writing the table to `out`.
pub fn run(registry: &CommandRegistry, command: &str, config_path: &Path, out: &Path) -> Result<Verdict, CliError> {
    let command = registry.get(command)?;
    let config = RunConfig::load(config_path)?;
    let table = command.run(&config)?;
    let file = std::fs::File::create(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    table.write(&config, command.name(), std::io::BufWriter::new(file))?;
    Ok(table.verdict)
}

/// Size the global worker pool from `HBEM_THREADS`, if set.
pub fn configure_threads(value: Option<&str>) -> Result<(), CliError> {
    let Some(value) = value else { return Ok(()) };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("HBEM_THREADS must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("HBEM_THREADS: {e}")))
}
