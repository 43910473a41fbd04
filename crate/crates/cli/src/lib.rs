//! Command-line front end: flag and config handling, source acquisition,
//! per-project runs and report aggregation.

pub mod args;
pub mod commands;
pub mod config;
pub mod report;
pub mod source;
