//! Scenario-driven front end: config parsing, the subcommands, sweeps and
//! the acceptance suite.

pub mod acceptance;
pub mod commands;
#[allow(non_snake_case)]
pub mod config;
pub mod scenarios;
