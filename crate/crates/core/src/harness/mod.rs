//! Experiment orchestration: dataset ingestion, grid evaluation, reports,
//! run configuration, and procedural test data.

pub mod config;
pub mod experiment;
pub mod ingest;
pub mod report;
pub mod synth;

pub use config::{default_eval_levels, RunConfig};
pub use experiment::{aggregate_levels, run_eval, ExperimentReport, ImageRow, LevelRow, SrMethod};
pub use ingest::{ingest_dataset, DatasetEntry, DatasetHandle};
pub use report::{psnr_curve_svg, series_from_level_csv, Series};
pub use synth::{synth_dataset, synth_image};
