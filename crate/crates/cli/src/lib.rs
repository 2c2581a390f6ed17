//! Command implementations behind the `chainform` binary.

pub mod commands;
pub mod server;
