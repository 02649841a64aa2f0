//! Configuration, experiment runners and result emission behind the
//! `memtele` binary.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{load_config, parse_config, ConfigError, Experiment, OutputFormat, RunConfig};
pub use experiments::{run_experiment, ResultRow, ResultTable};
pub use output::{emit_results, write_results, CSV_HEADER};
