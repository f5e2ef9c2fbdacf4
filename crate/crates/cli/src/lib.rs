//! Experiment driver for the `nsregret` command-line tool: configuration,
//! experiment cells and the subcommands.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
