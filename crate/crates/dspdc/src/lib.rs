//! File formats, the experiment runner and the `dspdc` command line, built on
//! [`dspdc_core`].
//!
//! Experiments are described by a JSON [`config::ExperimentConfig`]. Running
//! one writes a CSV trace per (solver, seed) and a `manifest.json` recording
//! the config hash, the library version and where the reference solution
//! came from. Certified references can be cached on disk; see [`cache`].

pub use dspdc_core as core;

pub mod cache;
pub mod config;
pub mod error;
pub mod experiment;
pub mod formats;
pub mod libsvm;
pub mod verify;

pub use error::{CliError, Result};
