//! Command-line front end for `heading-bss`: scenario files, CSV I/O,
//! reports and the `hbss` subcommands.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod plot;
pub mod report;

pub use commands::{exit_code, run, Cli};
