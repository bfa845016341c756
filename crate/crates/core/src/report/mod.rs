//! Command-line front end: configuration text, CSV output and figures.

pub mod cli;
pub mod figures;
pub mod format;
pub mod params;

pub use cli::{run, Cli, Outcome};
pub use format::fmt_sig;
pub use params::ConfigSpec;
