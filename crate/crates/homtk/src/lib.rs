//! File formats, configuration, multi-threaded drivers and the `homtk`
//! command-line interface on top of `homtk-core`.
//!
//! Exit statuses: 0 on success, 2 for usage, configuration and input errors,
//! 3 for numerical failures (non-converged fits, insufficient numerical
//! precision). The file formats are described in `docs/formats.md`.

#![deny(missing_docs)]

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod parallel;
pub mod svg;

pub use self::config::RunConfig;
pub use self::error::{CliError, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};
