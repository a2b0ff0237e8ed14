//! Command-line driver: configuration, orchestration and reporting.

pub mod config;
pub mod error;
pub mod report;
pub mod run;

use std::ffi::OsString;

use clap::{CommandFactory, Parser};

pub use config::{Args, RunConfig};
pub use error::CliError;
pub use report::{parse_jsonl, Record};
pub use run::execute;

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    if args.len() <= 1 {
        eprintln!("{}", Args::command().render_help());
        return 2;
    }
    let parsed = match Args::try_parse_from(&args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = RunConfig::resolve(parsed).and_then(|cfg| execute(&cfg));
    match result {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("rng-audit: {e}");
            e.exit_code()
        }
    }
}
