//! Mesh and snapshot files, the run configuration, the data expression
//! language and the subcommand pipelines of the `mixflow` command line.

pub mod config;
pub mod error;
pub mod expr;
pub mod meshio;
pub mod orchestrate;
pub mod output;

pub use config::{parse_config, parse_config_str, RunConfig};
pub use error::{exit, CliError};
pub use orchestrate::{orchestrate, Command, Options};
