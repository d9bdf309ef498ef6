//! `handover`: headless runs, offline query checks, batch summaries and the
//! interactive session server.

mod batch;
mod check;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "handover", version, about = "Foresight-driven handover simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario to completion.
    Run(run::RunArgs),
    /// Evaluate a query catalog on a stored trace.
    Check {
        catalog: PathBuf,
        /// Proposition lines or a JSONL event log.
        trace: PathBuf,
    },
    /// Run every scenario in a directory and write a CSV summary.
    Batch(batch::BatchArgs),
    /// Serve live sessions over HTTP.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory of static files for the browser client.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
}

fn serve(port: u16, static_dir: Option<PathBuf>) -> Result<u8, CliError> {
    let mut config = handover_service::ServiceConfig::default();
    if let Some(dir) = static_dir {
        if !dir.is_dir() {
            return Err(CliError::input(&dir, "not a directory"));
        }
        config.static_dir = Some(dir);
    }
    let runtime = tokio::runtime::Runtime::new().map_err(CliError::Serve)?;
    runtime
        .block_on(handover_service::serve(port, config))
        .map_err(CliError::Serve)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run::cmd_run(&args),
        Command::Check { catalog, trace } => check::cmd_check(&catalog, &trace),
        Command::Batch(args) => batch::cmd_batch(&args),
        Command::Serve { port, static_dir } => serve(port, static_dir),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
