//! Command-line front end for `lbtransport`.

pub mod commands;
pub mod config;
