//! Config-driven verification runs.

mod config;
mod run;
mod search;

pub use config::{AtomConfig, GridSpec, Kind, Range, RunConfig, SearchConfig, SweepConfig, Tolerances, SCHEMA_VERSION};
pub use run::{run, NamedCheck, ReportBundle, RunOutput, SweepRow, SweepTable};
pub use search::{counterexample_search, random_matrix, witness, Finding, SearchReport};
