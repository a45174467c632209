//! Command-line front end for `tacsum_core`: the TACEMB and annotation file
//! formats, the `summarize`, `evaluate`, `baseline` and `inspect` commands,
//! and SVG score plots.

pub mod cli;
pub mod commands;
pub mod format;
pub mod plot;

pub use cli::{Cli, Command};
pub use commands::{run, CliError};
