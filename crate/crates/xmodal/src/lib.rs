//! File formats, configuration and the `xmodal` command-line tool built on
//! [`xmodal_core`].

pub mod cli;
pub mod cmtf;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod store;

pub use error::{Failure, Kind};

/// Environment variable holding the log filter, e.g. `debug`.
pub const LOG_ENV: &str = "XMODAL_LOG";
