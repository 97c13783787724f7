//! Configuration, dispatch and CSV output for the `zetadist` command.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{parse_config, to_toml, RunConfig};
pub use error::CliError;
pub use output::{emit_csv, Table};
pub use run::{run_command, Command, Report};
