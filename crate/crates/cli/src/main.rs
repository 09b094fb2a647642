mod args;
mod commands;
mod output;
mod pipeline;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn init_threads() {
    let Ok(raw) = std::env::var("BBR_THREADS") else {
        return;
    };
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring BBR_THREADS={raw:?}: expected a positive integer"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    init_threads();

    let result = match &cli.command {
        Command::Validate(a) => commands::validate(a),
        Command::Rates(a) => commands::rates_cmd(a),
        Command::Decompose(a) => commands::decompose_cmd(a),
        Command::Fit(a) => commands::fit_cmd(a),
        Command::Ppc(a) => commands::ppc_cmd(a),
        Command::Simulate(a) => commands::simulate_cmd(a),
        Command::Report(a) => commands::report_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
