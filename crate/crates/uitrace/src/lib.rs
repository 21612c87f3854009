//! File formats, commands and the arena HTTP service around `uitrace-core`.
//!
//! Everything that touches the filesystem, the network or the process
//! environment lives here:
//!
//! - [`traces`]: the line-delimited trace file format.
//! - [`records`]: comparison records and the pairs manifest.
//! - [`report`]: score reports, leaderboard files and alignment reports.
//! - [`pgm`]: grayscale image loading for the toy embedder.
//! - [`fixture`]: the seeded synthetic corpus generator.
//! - [`config`]: run configuration from TOML plus command line overrides.
//! - [`commands`]: the `score`, `rank`, `align`, `embed` and `fixture` commands.
//! - [`arena`]: blinded pairwise voting over HTTP.

pub mod arena;
pub mod commands;
pub mod config;
mod error;
pub mod fixture;
pub mod jsonl;
pub mod pgm;
pub mod records;
pub mod report;
pub mod traces;

pub use error::{Error, Result, EXIT_COMPUTE, EXIT_IO, EXIT_OK, EXIT_VALIDATION};
pub use uitrace_core as core;
