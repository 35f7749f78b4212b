//! Library surface of the `gnan` binary: the experiment-spec parser and the
//! subcommand implementations. Split out of `main.rs` so integration tests
//! can exercise spec parsing against the shipped experiment files.

pub mod commands;
pub mod spec;
