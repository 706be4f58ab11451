//! IO, run records, and command implementations behind the `fdc` binary.

pub mod commands;
pub mod io;
pub mod record;
pub mod runner;
