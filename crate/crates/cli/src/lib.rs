//! Command-line front end and HTTP service for `jointvip`.

pub mod cli;
pub mod error;
pub mod pipeline;
pub mod service;

pub use error::CliError;
