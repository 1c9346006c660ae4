//! Scenario configuration, per-interval orchestration and sweeps.

pub mod config;
pub mod interval;
pub mod output;
pub mod sweep;

pub use config::{dbw_to_w, EstimationSettings, Geometry, Radio, ScenarioConfig};
pub use interval::{deploy_iots, deploy_iots_with_mast, run_coherence_interval, TrialRecord};
pub use output::{emit_results, read_csv, read_structured, write_csv, CsvRow, OutputFormat, CSV_COLUMNS};
pub use sweep::{apply_value, run_sweep, CellResult, SweepSpec, SweepTable, SweepValue, SweepVariable};
