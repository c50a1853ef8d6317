use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod output;

use args::{Cli, Command};

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(regretlab_core::Error),
    Replay(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use regretlab_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Replay(_) => 1,
            CliError::Core(e) => match e {
                E::InvalidDims(_)
                | E::InvalidParameter(_)
                | E::NoObservations
                | E::NonUniqueBest
                | E::ProductOutOfRange { .. } => 2,
                E::EnumerationCapExceeded { .. } => 4,
                E::QuadratureNonConvergence { .. } => 1,
                _ => 3,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Replay(msg) => f.write_str(msg),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<regretlab_core::Error> for CliError {
    fn from(e: regretlab_core::Error) -> Self {
        CliError::Core(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.common.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let result = match &cli.command {
        Command::Replay(r) => commands::replay(r, cli.common.out.as_deref()),
        cmd => commands::execute(cmd, &cli.common)
            .and_then(|artifacts| output::emit(&artifacts, cli.common.out.as_deref())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
