//! Command-line plumbing around `kerr-qsd`: configuration files, CSV
//! output, a thread-pool executor and the acceptance suite.

pub mod commands;
pub mod config;
pub mod csv;
pub mod executor;
pub mod validate;
