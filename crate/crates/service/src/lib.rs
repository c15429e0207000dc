//! Session service and command-line front end for the academic workbench.

pub mod cli;
pub mod config;
pub mod server;
pub mod session;
