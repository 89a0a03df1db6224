//! Run specs, subcommands and the acceptance suite behind the
//! `sobolev-homeo` binary.

pub mod commands;
pub mod report;
pub mod spec;
pub mod suite;

pub use commands::{run, CliError, CliResult, Ctx};
pub use report::{write_outcome, Check, Emit, Outcome, Table};
pub use spec::{CommandName, RunSpec, Tolerances};
