//! Command line and HTTP front end for the `mstlens` engine.

pub mod api;
pub mod cli;

pub use cli::{run, Cli};
