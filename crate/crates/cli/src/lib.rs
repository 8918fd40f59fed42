//! Library behind the `glmpss` binary. Arguments, with any config file folded
//! in, parse into a [`Command`] and the [`CommandConfig`] echoed in output.

pub mod commands;
pub mod config;
pub mod design;
pub mod error;
pub mod report;

use std::ffi::OsString;
use std::io::Write;

use clap::{CommandFactory, FromArgMatches};

pub use commands::{Cli, Command, Format};
pub use config::CommandConfig;
pub use design::{compute_empirical_effects, load_design_csv, Coefficients, DesignSchema};
pub use error::{CliError, ErrorKind, Result};

/// Parses arguments (after config expansion) into a command and its
/// effective configuration. `Ok(None)` means help or version was printed.
pub fn parse_args(args: Vec<OsString>) -> Result<Option<(Command, CommandConfig)>> {
    let args = config::expand_config(args)?;
    let mut app = Cli::command();
    let matches = match app.try_get_matches_from_mut(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand) {
                e.print().map_err(|io| CliError::new(ErrorKind::Output, io.to_string()))?;
                return Ok(None);
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            return Err(CliError::config(first.trim_start_matches("error: ")));
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::config(e.to_string()))?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let sub_cmd = app.find_subcommand(name).expect("matched subcommand exists");
    let echo = CommandConfig::from_matches(name, sub, sub_cmd);
    Ok(Some((cli.command, echo)))
}

/// Runs one invocation, writing standard output to `stdout`.
pub fn run<W: Write>(args: Vec<OsString>, stdout: &mut W) -> Result<()> {
    let Some((command, echo)) = parse_args(args)? else { return Ok(()) };
    let table = command.execute()?;
    let output = command.output();
    let io = |e: std::io::Error| CliError::new(ErrorKind::Output, e.to_string());
    if let Some(path) = &output.out {
        report::write_atomic(path, &table.to_csv(&echo.metadata_lines())?)?;
        if output.format == Some(Format::Human) {
            stdout.write_all(table.to_human().as_bytes()).map_err(io)?;
        }
        return Ok(());
    }
    match output.format.unwrap_or(command.default_format()) {
        Format::Human => stdout.write_all(table.to_human().as_bytes()).map_err(io),
        Format::Csv => stdout.write_all(&table.to_csv(&echo.metadata_lines())?).map_err(io),
    }
}
