//! Command-line front end: dataset generation, single runs, benchmark sweeps
//! and offline metric evaluation.

pub mod args;
pub mod commands;
pub mod config;

use std::process::ExitCode;

pub use config::{parse_config, ConfigLayer, ExperimentConfig, Format, Method};

/// Failures grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid flags, config file or input data (exit 2).
    #[error("configuration error: {0}")]
    Config(String),
    /// The chosen method's preconditions failed on this data (exit 3).
    #[error("{0}")]
    Method(fasc::Error),
    /// Filesystem trouble (exit 1).
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Method(_) => 3,
        }
    }

    /// Errors raised while reading user-supplied files.
    pub fn from_input(e: fasc::Error) -> Self {
        match e {
            fasc::Error::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Parses arguments, runs the command and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match args::Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
