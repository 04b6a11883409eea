//! Library surface of the experiment harness (the binary is a thin wrapper,
//! kept separate so integration tests can drive the commands directly).

pub mod commands;
pub mod config;
pub mod report;
