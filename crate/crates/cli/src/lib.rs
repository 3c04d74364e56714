//! Library behind the `plfam` command-line tool.

pub mod bundle;
pub mod cli;
pub mod commands;
pub mod error;
pub mod io;

pub use error::{CliError, Result};
