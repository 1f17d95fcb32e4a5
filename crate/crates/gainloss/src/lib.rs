#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! File formats, parallel sweeps and the command-line front end for
//! [`gainloss_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod sweep;

pub use error::CliError;
