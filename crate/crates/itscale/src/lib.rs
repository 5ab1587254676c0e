//! Command-line driver for `itscale-core`: price ingestion, flat TOML
//! configuration, self-describing TSV output and parallel grids.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod grid;
pub mod ingest;
pub mod tsv;

pub use cli::run;
pub use error::{CliError, Result};
