//! Experiment runner and command-line front end for the `robust_gan` estimators.
//!
//! Experiments are JSON configs describing a contamination grid and a list of
//! estimators; [`runner::run_experiment`] evaluates every cell and
//! [`tables::emit_tables`] writes CSV and markdown summaries.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod parse;
pub mod runner;
pub mod selfcheck;
pub mod sweep;
pub mod tables;
