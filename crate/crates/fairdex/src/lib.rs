//! Readers and writers for TREC runs, qrels, category maps and target files,
//! report serialization, a seeded synthetic collection generator and the
//! `fairdex` command-line tool. Metric computation lives in `fairdex_core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod report;
pub mod synth;

pub use error::{Error, Result};
