//! Library side of the `increg` binary: configuration, dataset readers and
//! one function per subcommand.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod plot;

pub use config::RunConfig;
