use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::params::{ExperimentParams, PARAM_KEYS};
use crate::protocol::SamplingMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    Table1,
    Fig3,
    Visibility,
    Budget,
    BellCheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Table1 => "table1",
            Experiment::Fig3 => "fig3",
            Experiment::Visibility => "visibility",
            Experiment::Budget => "budget",
            Experiment::BellCheck => "bell-check",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table1" => Ok(Experiment::Table1),
            "fig3" => Ok(Experiment::Fig3),
            "visibility" => Ok(Experiment::Visibility),
            "budget" => Ok(Experiment::Budget),
            "bell-check" => Ok(Experiment::BellCheck),
            other => Err(format!(
                "unknown experiment '{other}' (table1|fig3|visibility|budget|bell-check)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format '{other}' (csv|json)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown key '{0}'")]
    UnknownKey(String),

    #[error("invalid {field}: {message}")]
    InvariantViolation { field: String, message: String },

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Storage times of the decay scan when none are configured, microseconds.
pub const DEFAULT_STORAGE_TIMES: [f64; 12] = [0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 12.0];

/// Run-control keys accepted next to the physical parameters.
pub const RUN_KEYS: [&str; 8] = [
    "experiment",
    "seed",
    "trials",
    "workers",
    "storage_times",
    "output",
    "format",
    "mode",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub params: ExperimentParams,
    pub seed: u64,
    /// Effective number of heralded trials each Monte Carlo estimate aims for.
    /// For `bell-check` it is the number of random inputs.
    pub trials: u64,
    pub workers: usize,
    pub storage_times: Vec<f64>,
    /// `None` writes to stdout.
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
    pub mode: SamplingMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: Experiment::Budget,
            params: ExperimentParams::default(),
            seed: 1,
            trials: 20_000,
            workers: 1,
            storage_times: DEFAULT_STORAGE_TIMES.to_vec(),
            output_path: None,
            format: OutputFormat::Csv,
            mode: SamplingMode::Conditioned,
        }
    }
}

fn invariant(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::InvariantViolation {
        field: field.to_owned(),
        message: message.into(),
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| invariant(key, format!("cannot parse '{value}'")))
}

impl RunConfig {
    /// Set one key. Physical parameters take the field names of
    /// [`ExperimentParams`]; see [`RUN_KEYS`] for the rest.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "experiment" => self.experiment = value.parse().map_err(|e: String| invariant(key, e))?,
            "seed" => self.seed = parse_value(key, value)?,
            "trials" => self.trials = parse_value(key, value)?,
            "workers" => self.workers = parse_value(key, value)?,
            "storage_times" => {
                self.storage_times = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_value(key, s))
                    .collect::<Result<_, _>>()?
            }
            "output" => self.output_path = (!value.is_empty()).then(|| PathBuf::from(value)),
            "format" => self.format = value.parse().map_err(|e: String| invariant(key, e))?,
            "mode" => self.mode = value.parse().map_err(|e: String| invariant(key, e))?,
            _ if PARAM_KEYS.contains(&key) => {
                let v: f64 = parse_value(key, value)?;
                self.params.set(key, v);
            }
            _ => return Err(ConfigError::UnknownKey(key.to_owned())),
        }
        Ok(())
    }

    /// Apply a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| ConfigError::Parse {
            line: 0,
            message: format!("expected key=value, got '{assignment}'"),
        })?;
        self.set(key.trim(), value)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.params.validate() {
            Ok(()) => {}
            Err(crate::error::Error::ParamOutOfRange { name, value, expected }) => {
                return Err(invariant(name, format!("{value} is outside {expected}")))
            }
            Err(e) => return Err(invariant("params", e.to_string())),
        }
        if self.trials == 0 {
            return Err(invariant("trials", "must be at least 1"));
        }
        if self.workers == 0 {
            return Err(invariant("workers", "must be at least 1"));
        }
        if self.experiment == Experiment::Fig3 && self.storage_times.is_empty() {
            return Err(invariant("storage_times", "must be non-empty for fig3"));
        }
        if let Some(t) = self.storage_times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(invariant("storage_times", format!("{t} is not a non-negative time")));
        }
        Ok(())
    }
}

/// Parse a flat `key = value` file. `#` starts a comment; blank lines are
/// ignored; keys not set keep their defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut config = RunConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
            line: i + 1,
            message: format!("expected key = value, got '{line}'"),
        })?;
        config.set(key.trim(), value)?;
    }
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_config(&text)
}
