//! Command-line front end: configuration parsing, single runs, convergence
//! studies, and the invariant check table.

pub mod check;
pub mod config;
pub mod study;

pub use config::{parse_args, RunConfig};
