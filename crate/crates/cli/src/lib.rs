//! Command-line front end and rating session service.

pub mod commands;
pub mod server;
