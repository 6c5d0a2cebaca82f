//! Command-line front end: configuration, subcommands and oracle checks.

pub mod app;
pub mod checks;
pub mod config;
