//! Command-line front end: input parsing and the `exponent`, `verify`,
//! `sweep` and `simulate` commands.

pub mod commands;
pub mod error;
pub mod format;
pub mod input;

pub use error::{CliError, CliResult};
