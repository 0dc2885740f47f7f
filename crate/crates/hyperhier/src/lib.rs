//! Harness around [`hyperhier_core`]: synthetic data, on-disk formats,
//! experiment pipeline and the `hyperhier` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod cli;
pub mod config;
mod error;
pub mod hheb;
pub mod pipeline;
pub mod report;
pub mod synthetic;
pub mod treefile;

pub use error::{FormatError, HarnessError};
pub use hyperhier_core;
