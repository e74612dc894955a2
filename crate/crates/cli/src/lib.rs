//! Implementation of the `concord` command line.
//!
//! All subcommands share `--config FILE` (see [`config`]) and `--seed N`.
//! Given the same inputs, seed and config, `simulate`, `fit` and `eval`
//! write byte-identical output.

pub mod commands;
pub mod config;

pub use commands::{run, Cli, Command};
pub use config::Config;
