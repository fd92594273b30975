//! Library side of the `qwalk` command: configuration, file formats and the
//! subcommand bodies.

pub mod commands;
pub mod config;
pub mod matrix_file;
pub mod output;
