//! File formats, experiment runner and command-line interface around
//! [`glyco_core`].
//!
//! The numeric work lives in the `no_std` core crate; this crate adds
//! everything that touches the file system or threads: CSV ingestion and
//! export, binary model files, the JSON experiment config, a rayon-parallel
//! runner, summary tables and SVG figures, and the `glyco` binary.

pub mod cli;
pub mod config;
pub mod csv;
pub mod error;
pub mod experiment;
pub mod format;
pub mod render;

pub use error::{Error, Result};
pub use glyco_core as core;
