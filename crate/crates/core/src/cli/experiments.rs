use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::budget::{compute_budget, fidelity_curve, fit_decay, BudgetInputs, CLASSICAL_LIMIT};
use crate::error::Result;
use crate::protocol::exact::exact_verification;
use crate::protocol::{
    run_teleportation, run_verification, verify_bell_identity, InputState, RunSettings, VerificationBasis,
};

use super::{Experiment, RunConfig};

/// Storage time of the fidelity table, microseconds.
pub const TABLE1_STORAGE_TIME: f64 = 0.5;

/// Measured fidelities for H, + and R (measured reference, display only).
pub const MEASURED_TABLE1: [(InputState, f64); 3] =
    [(InputState::H, 0.865), (InputState::Plus, 0.737), (InputState::R, 0.750)];

/// Measured entanglement visibilities in the H/V (15:1 contrast) and +/-
/// bases (measured reference, display only).
pub const MEASURED_VISIBILITY: [(VerificationBasis, f64); 2] =
    [(VerificationBasis::HV, 0.875), (VerificationBasis::PM, 0.822)];

/// Trials per Monte Carlo batch. Fixed so output does not depend on workers.
pub const BATCH_SIZE: u64 = 8192;
/// Trial cap per estimate, as a multiple of the effective-trial target.
pub const MAX_TRIALS_FACTOR: u64 = 1000;

/// One output row. Columns that do not apply are empty in CSV and null in JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub input_state: String,
    pub storage_time_us: Option<f64>,
    pub mc_fidelity: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub oracle_fidelity: Option<f64>,
    pub reference_value: Option<f64>,
    pub n_effective_trials: Option<f64>,
    pub seed: Option<u64>,
}

impl ResultRow {
    fn new(experiment: &str, input_state: &str) -> Self {
        ResultRow {
            experiment: experiment.to_owned(),
            input_state: input_state.to_owned(),
            storage_time_us: None,
            mc_fidelity: None,
            mc_stderr: None,
            oracle_fidelity: None,
            reference_value: None,
            n_effective_trials: None,
            seed: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

fn settings(config: &RunConfig) -> RunSettings {
    RunSettings {
        seed: config.seed,
        workers: config.workers,
        target_ess: config.trials as f64,
        batch_size: BATCH_SIZE,
        max_trials: config.trials.saturating_mul(MAX_TRIALS_FACTOR),
        mode: config.mode,
    }
}

/// Monte Carlo and budget fidelity of `input` at `t`.
fn teleportation_row(
    config: &RunConfig,
    base: &BudgetInputs,
    experiment: &str,
    input: &InputState,
    t: f64,
) -> Result<ResultRow> {
    let run = run_teleportation(&config.params, input, t, &settings(config))?;
    let oracle = fidelity_curve(base, &config.params, input, &[t])?[0].1;
    Ok(ResultRow {
        storage_time_us: Some(t),
        mc_fidelity: Some(run.estimate.fidelity),
        mc_stderr: Some(run.estimate.std_err),
        oracle_fidelity: Some(oracle),
        n_effective_trials: Some(run.estimate.n_effective),
        seed: Some(config.seed),
        ..ResultRow::new(experiment, &input.label())
    })
}

fn table1(config: &RunConfig) -> Result<Vec<ResultRow>> {
    let base = BudgetInputs::from_params(&config.params)?;
    MEASURED_TABLE1
        .iter()
        .map(|(input, measured)| {
            let mut row = teleportation_row(config, &base, "table1", input, TABLE1_STORAGE_TIME)?;
            row.reference_value = Some(*measured);
            Ok(row)
        })
        .collect()
}

/// Fidelity of R along the storage times, then one row per fit of the
/// Gaussian decay (budget curve and Monte Carlo points) whose
/// `storage_time_us` is the fitted crossing of the classical limit.
fn fig3(config: &RunConfig) -> Result<Vec<ResultRow>> {
    let input = InputState::R;
    let base = BudgetInputs::from_params(&config.params)?;
    let mut rows = Vec::new();
    for &t in &config.storage_times {
        rows.push(teleportation_row(config, &base, "fig3", &input, t)?);
    }
    let mc_points: Vec<(f64, f64, f64)> = rows
        .iter()
        .map(|r| (r.storage_time_us.unwrap(), r.mc_fidelity.unwrap(), r.mc_stderr.unwrap()))
        .collect();
    let oracle_points: Vec<(f64, f64, f64)> = rows
        .iter()
        .map(|r| (r.storage_time_us.unwrap(), r.oracle_fidelity.unwrap(), 0.0))
        .collect();
    let oracle_fit = fit_decay(&base, &config.params, &input, &oracle_points)?;
    let mc_fit = fit_decay(&base, &config.params, &input, &mc_points)?;
    rows.push(ResultRow {
        storage_time_us: oracle_fit.crossing_time,
        oracle_fidelity: Some(CLASSICAL_LIMIT),
        ..ResultRow::new("fig3-crossing-oracle", &input.label())
    });
    rows.push(ResultRow {
        storage_time_us: mc_fit.crossing_time,
        mc_fidelity: Some(CLASSICAL_LIMIT),
        seed: Some(config.seed),
        ..ResultRow::new("fig3-crossing-mc", &input.label())
    });
    Ok(rows)
}

/// Entanglement visibility per basis; the fidelity columns carry visibilities.
fn visibility(config: &RunConfig) -> Result<Vec<ResultRow>> {
    MEASURED_VISIBILITY
        .iter()
        .map(|(basis, measured)| {
            let run = run_verification(&config.params, *basis, &settings(config))?;
            let exact = exact_verification(&config.params, *basis)?;
            Ok(ResultRow {
                storage_time_us: Some(0.0),
                mc_fidelity: Some(run.estimate.visibility),
                mc_stderr: Some(run.estimate.std_err),
                oracle_fidelity: Some(exact.visibility()),
                reference_value: Some(*measured),
                n_effective_trials: Some(run.estimate.n_effective),
                seed: Some(config.seed),
                ..ResultRow::new("visibility", basis.name())
            })
        })
        .collect()
}

/// Budget fidelity of the six poles, then their herald confidences and the
/// six-pole average confidence.
fn budget(config: &RunConfig) -> Result<Vec<ResultRow>> {
    let base = BudgetInputs::from_params(&config.params)?;
    let mut rows = Vec::new();
    let mut heralds = Vec::new();
    for input in InputState::POLES {
        let b = compute_budget(&base, &input)?;
        rows.push(ResultRow {
            storage_time_us: Some(0.0),
            oracle_fidelity: Some(b.fidelity_pred),
            ..ResultRow::new("budget", &input.label())
        });
        heralds.push((input, b.herald_confidence));
    }
    for (input, h) in &heralds {
        rows.push(ResultRow {
            oracle_fidelity: Some(*h),
            ..ResultRow::new("budget-herald", &input.label())
        });
    }
    let average = heralds.iter().map(|h| h.1).sum::<f64>() / heralds.len() as f64;
    rows.push(ResultRow {
        oracle_fidelity: Some(average),
        ..ResultRow::new("budget-herald", "average")
    });
    Ok(rows)
}

/// Teleportation identity on `trials` random inputs: `mc_fidelity` is the
/// worst conditional-state fidelity and `mc_stderr` the worst branch
/// probability error.
fn bell_check(config: &RunConfig) -> Result<Vec<ResultRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let report = verify_bell_identity(config.trials as usize, &mut rng)?;
    Ok(vec![ResultRow {
        mc_fidelity: Some(1.0 - report.max_fidelity_error),
        mc_stderr: Some(report.max_probability_error),
        oracle_fidelity: Some(1.0),
        n_effective_trials: Some(report.n_random as f64),
        seed: Some(config.seed),
        ..ResultRow::new("bell-check", if report.passed { "passed" } else { "failed" })
    }])
}

pub fn run_experiment(config: &RunConfig) -> Result<ResultTable> {
    let rows = match config.experiment {
        Experiment::Table1 => table1(config)?,
        Experiment::Fig3 => fig3(config)?,
        Experiment::Visibility => visibility(config)?,
        Experiment::Budget => budget(config)?,
        Experiment::BellCheck => bell_check(config)?,
    };
    Ok(ResultTable { rows })
}
