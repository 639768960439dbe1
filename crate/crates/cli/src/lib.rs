//! Command-line front end and experiment harness for `otl-core`.

pub mod cli;
pub mod harness;
