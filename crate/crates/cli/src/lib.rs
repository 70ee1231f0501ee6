//! File formats, configuration and the pipeline stages behind the
//! `sociopose` binary. Numerical work lives in `sociopose_core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod fmx;
pub mod manifest;
pub mod run;
pub mod tables;
pub mod tracks;

pub use config::{LoadedConfig, RunConfig};
pub use error::{CliError, Result};
