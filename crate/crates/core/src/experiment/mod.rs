//! Parameter sweeps: configuration, parallel execution and CSV output.

mod config;
pub mod figures;
mod output;
mod sweep;

pub use config::{parse_config, parse_config_named, AnglePair, ConfigError, ScenarioInstance, SweepSpec};
pub use output::{format_f64, write_csv, write_element_records, write_records, CSV_HEADER, ELEMENT_CSV_HEADER};
pub use sweep::{run_sweep, ElementRecord, RunOptions, SweepOutput, SweepRecord};
