use buildsmith_cli::args::{Cli, Command};
use buildsmith_cli::commands;
use clap::Parser;
use tracing_subscriber::EnvFilter;

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(level));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
    let code = match &cli.command {
        Command::Build(args) => commands::build(args),
        Command::Baseline(args) => commands::baseline(args),
        Command::Report(args) => commands::report(args),
    };
    std::process::exit(code);
}
