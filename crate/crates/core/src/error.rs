use thiserror::Error;

use crate::fock::ModeLabel;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mode {0} is not present in the state")]
    UnknownMode(String),

    #[error("mode {0} already exists in the state")]
    DuplicateMode(ModeLabel),

    #[error("{photons} photons routed into mode {mode} exceed the cap n_max = {n_max}")]
    TruncationOverflow {
        mode: ModeLabel,
        photons: usize,
        n_max: u8,
    },

    #[error("state has support outside the one-photon-per-qubit sector")]
    NotTwoQubit,

    #[error("parameter {name} = {value} is out of range ({expected})")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        expected: String,
    },

    #[error("state carries no spin modes to read out")]
    MissingSpinModes,

    #[error("state carries no Stokes modes to analyze")]
    MissingStokesModes,

    #[error("feed-forward is undefined for an unheralded trial")]
    NoResultOutcome,

    #[error("no heralded three-fold coincidences in the record set")]
    NoHeraldedTrials,

    #[error("records mix inputs or storage times")]
    MixedRecords,

    #[error("unknown parameter '{0}'")]
    UnknownParameter(String),

    #[error("parameter grid has an empty axis")]
    EmptyGrid,

    #[error("no value brackets the calibration target {target} for {name}")]
    CalibrationFailed { name: &'static str, target: f64 },
}

pub(crate) fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange {
            name,
            value,
            expected: format!("[{lo}, {hi}]"),
        })
    }
}

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange {
            name,
            value,
            expected: "[0, 1]".to_owned(),
        })
    }
}
