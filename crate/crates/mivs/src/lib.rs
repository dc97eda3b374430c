//! Std companion of `mivs-core`: CSV and split files, the Tecator archive
//! converter, experiment configuration, report documents and the `mivs`
//! command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod report;

pub use crate::error::{CliError, CliResult};
