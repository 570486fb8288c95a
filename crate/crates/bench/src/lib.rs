//! Host-side harness for `sem-core`: rayon drivers, the streaming bandwidth
//! probe, the verification suite, report formats and the `sembench` CLI.

pub mod cli;
pub mod config;
pub mod error;
pub mod oracle;
pub mod parallel;
pub mod probe;
pub mod report;
pub mod run;
pub mod verify;

pub use config::{BenchConfig, FlopsSource, OutputFormat, VariantSelection};
pub use error::{BenchError, Result};
pub use report::{PerfRow, RooflineRow};
