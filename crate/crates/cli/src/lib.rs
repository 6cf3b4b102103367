//! Command-line front end for `eigenoverlap`: file ingestion, subcommands and
//! CSV/JSON emission.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use args::{Cli, Command};
pub use error::{CliError, CliResult};

/// Environment variable holding the worker thread count for sweeps.
pub const THREADS_ENV: &str = "EIGENOVERLAP_THREADS";

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::input(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // A pool already installed by an earlier call in this process is kept.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match &cli.command {
        Command::Moments(a) => commands::cmd_moments(a),
        Command::Bound(a) => commands::cmd_bound(a),
        Command::Sweep(a) => commands::cmd_sweep(a),
        Command::GenModel(a) => commands::cmd_gen_model(a),
        Command::Classic(a) => commands::cmd_classic(a),
    }
}
