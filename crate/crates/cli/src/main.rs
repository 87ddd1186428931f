use std::io::IsTerminal;
use std::process::ExitCode;

use clap::Parser;
use prefkit_cli::{execute, resolved_config, Cli};
use tracing::{error, info, Level};

fn init_logging(cli: &Cli) {
    let level = if cli.quiet { Level::WARN } else { Level::INFO };
    let builder = tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal());
    if cli.json_logs {
        builder.json().init();
    } else {
        builder.init();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(&cli);
    let config = resolved_config(&cli);
    if cli.quiet {
        eprintln!("config: {config}");
    } else {
        info!(%config, "resolved config");
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            error!(error = format!("{err:#}"), "failed");
            ExitCode::FAILURE
        }
    }
}
