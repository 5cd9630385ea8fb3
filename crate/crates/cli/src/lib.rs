//! Command-line front end and experiment drivers.

pub mod commands;
pub mod config;
pub mod experiment;
