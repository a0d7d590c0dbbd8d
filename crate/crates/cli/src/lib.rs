//! Command-line front end for `nirfuse`: image codecs, configuration files,
//! batch runs and JSON-lines metric reports.

mod alloc;
pub mod batch;
pub mod cli;
pub mod codec;
pub mod config;
pub mod error;
pub mod report;

pub use alloc::retain_heap;
pub use cli::{run, Cli};
pub use error::{CliError, Result};
