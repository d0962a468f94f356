//! Command-line front end of dfakit. The binary is a thin wrapper around
//! [`run_cli`]; the pieces are public so runs can be scripted from Rust.

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;

use clap::error::ErrorKind;

pub use config::Params;
pub use error::CliError;

/// Environment variable holding the default worker-thread cap.
pub const THREADS_ENV: &str = "DFAKIT_THREADS";

/// Parses `args`, configures the thread pool and runs the subcommand.
/// Returns the process exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match config::command_line().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match dispatch(&matches) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("dfakit: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(matches: &clap::ArgMatches) -> Result<(), CliError> {
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let command = match name {
        "generate" => "generate",
        "analyze" => "analyze",
        "fit" => "fit",
        "study" => "study",
        other => return Err(CliError::Usage(format!("unknown subcommand {other}"))),
    };
    let cfg = match sub.get_one::<String>("config") {
        Some(path) => Some(config::read_config_file(path.as_ref())?),
        None => None,
    };
    let params = Params::resolve(command, sub, cfg.as_ref())?;
    configure_threads(sub.get_one::<usize>("threads").copied())?;
    commands::run(params)
}

/// Caps the global rayon pool. Results do not depend on the thread count.
fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let threads = match flag {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) if !v.trim().is_empty() => Some(v.trim().parse::<usize>().map_err(|_| {
                CliError::Usage(format!(
                    "{THREADS_ENV} must be a positive integer (got `{v}`)"
                ))
            })?),
            _ => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Usage("thread count must be at least 1".into()));
        }
        // a second initialization (e.g. repeated calls in one process) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    Ok(())
}
