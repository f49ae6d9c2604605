//! Configuration, orchestration and file output for the `sbnrg` binary.

pub mod config;
pub mod error;
pub mod execute;
pub mod output;

pub use config::{parse_config, Mode, RunConfig};
pub use error::{CliError, CliResult};
pub use execute::{execute, Invocation};
