//! Batch front end: survey ingestion, fits, synthetic benchmarks and
//! evaluation, all writing plain CSV/JSON artifacts.

pub mod commands;
pub mod config;
pub mod ingest;
pub mod output;

pub use config::{EmitFlags, RunConfig};
pub use ingest::{ingest_reports, IngestError, IngestOptions, LabelMap, MaskRule, Survey};
