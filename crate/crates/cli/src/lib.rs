//! Command-line front end for `gibbsfit`: data loading, pipeline runs, reports
//! and bundled demonstrations.

pub mod demos;
pub mod error;
pub mod format;
pub mod io;
pub mod report;
pub mod run;

pub use error::{CliError, EXIT_DATA, EXIT_SOLVER};
pub use report::{Body, Report};
pub use run::{execute, run, Command, OutputFormat, RunConfig};
