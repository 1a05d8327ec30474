//! Scenario files, command implementations and output formatting for the
//! `gridswing` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod commands;
pub mod output;
pub mod scenario;

pub use commands::{CliError, Level, Solver};
pub use scenario::{ParseError, ScenarioFile};
