//! File ingestion, synthetic regions and the `geoaccess` command line.

pub mod assign;
pub mod cli;
pub mod cohort;
pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod geometry;
pub mod ingest;
pub mod synth;

pub use cli::run_cli;
pub use cohort::{cohort_summary, is_adrd_code, CohortSummary, GroupStats};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use ingest::{load_counties, load_facilities, load_patients, load_zones, PatientRecord, ZoneSet};
pub use synth::{generate_synthetic_region, SyntheticRegion};
