//! File formats, parallel drivers and the `screenband` command line for
//! [`screening_core`].
//!
//! Every file this crate writes starts with `#` comment lines recording the
//! format version, the subcommand, the flags that determine its contents
//! and the seed, so an output can be regenerated from its own header.

pub mod cli;
pub mod error;
pub mod evaluate;
pub mod io;
pub mod parallel;
pub mod spec;

pub use error::{CliError, Result};

/// Version of the CSV and JSON layouts written by this crate.
pub const FORMAT_VERSION: &str = "1";

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_601;
