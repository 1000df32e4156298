//! File formats, experiment harness and command-line front end for the
//! subgroup drift monitor in `driftscope-core`.

pub mod adult;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod io;
pub mod manifest;
pub mod outcomes;
pub mod pipeline;

pub use error::{AppError, AppResult};
