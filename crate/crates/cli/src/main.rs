use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use lake_cli::cli::{run, Cli, Command};
use lake_cli::server::{serve, AppState};

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_max_level(
            std::env::var("RUST_LOG")
                .ok()
                .and_then(|l| l.parse::<tracing::Level>().ok())
                .unwrap_or(tracing::Level::WARN),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Serve { addr } => AppState::open(&cli.root)
            .map_err(anyhow::Error::from)
            .and_then(|state| {
                tokio::runtime::Runtime::new()?.block_on(serve(state, addr))?;
                Ok(String::new())
            }),
        _ => run(&cli),
    };
    match result {
        Ok(out) => {
            let _ = std::io::stdout().write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
