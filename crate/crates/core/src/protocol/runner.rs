use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::detection::BsmOutcome;
use crate::error::{Error, Result};
use crate::memory::check_storage_time;
use crate::params::ExperimentParams;

use super::teleport::teleportation_trial;
use super::{
    estimate_fidelity, run_verification_trial, SourceProposal, FidelityEstimate, InputState, SamplingMode,
    TrialRecord, VerificationBasis, VerificationEstimate, VerificationRecord,
};

/// Controls for a Monte Carlo run. Trial `i` draws from the ChaCha8 stream `i`
/// of `seed`, so results do not depend on `workers` and runs that share a seed
/// share their random numbers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSettings {
    pub seed: u64,
    pub workers: usize,
    /// Stop once the effective sample size of the counted events reaches this.
    pub target_ess: f64,
    pub batch_size: u64,
    pub max_trials: u64,
    pub mode: SamplingMode,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            seed: 1,
            workers: 1,
            target_ess: 20_000.0,
            batch_size: 20_000,
            max_trials: 5_000_000,
            mode: SamplingMode::Conditioned,
        }
    }
}

impl RunSettings {
    /// A fixed number of trials regardless of the effective sample size.
    pub fn fixed(seed: u64, trials: u64, workers: usize, mode: SamplingMode) -> Self {
        RunSettings {
            seed,
            workers,
            target_ess: f64::INFINITY,
            batch_size: trials.max(1),
            max_trials: trials,
            mode,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::ParamOutOfRange {
                name: "workers",
                value: 0.0,
                expected: ">= 1".into(),
            });
        }
        if self.batch_size == 0 || self.max_trials == 0 {
            return Err(Error::ParamOutOfRange {
                name: "trials",
                value: 0.0,
                expected: ">= 1".into(),
            });
        }
        Ok(())
    }

    fn pool(&self) -> rayon::ThreadPool {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .expect("thread pool")
    }
}

pub(crate) fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Run batches of trials until `done` says so, keeping the records `keep`
/// accepts in trial order. Returns the kept records and the trial count.
fn run_batches<T, F, K, D>(settings: &RunSettings, trial: F, keep: K, mut done: D) -> Result<(Vec<T>, u64)>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
    K: Fn(&T) -> bool + Sync,
    D: FnMut(&[T]) -> bool,
{
    settings.validate()?;
    let pool = settings.pool();
    let mut kept = Vec::new();
    let mut n = 0;
    while n < settings.max_trials {
        let end = (n + settings.batch_size).min(settings.max_trials);
        let batch: Vec<T> = pool.install(|| {
            (n..end)
                .into_par_iter()
                .map(|i| trial(&mut trial_rng(settings.seed, i)))
                .filter(|r| r.as_ref().map_or(true, &keep))
                .collect::<Result<Vec<_>>>()
        })?;
        kept.extend(batch);
        n = end;
        if done(&kept) {
            break;
        }
    }
    Ok((kept, n))
}

#[derive(Clone, Debug)]
pub struct TeleportationRun {
    /// Heralded records only.
    pub records: Vec<TrialRecord>,
    pub n_trials: u64,
    pub estimate: FidelityEstimate,
}

pub fn run_teleportation(
    params: &ExperimentParams,
    input: &InputState,
    t: f64,
    settings: &RunSettings,
) -> Result<TeleportationRun> {
    params.validate()?;
    check_storage_time(t)?;
    let proposal = SourceProposal::teleportation(params, input, settings.mode)?;
    let (records, n_trials) = run_batches(
        settings,
        |rng| teleportation_trial(params, input, t, &proposal, settings.mode, rng),
        |r| r.bsm != BsmOutcome::NoResult,
        |kept| estimate_fidelity(kept).is_ok_and(|e| e.n_effective >= settings.target_ess),
    )?;
    let estimate = estimate_fidelity(&records)?;
    Ok(TeleportationRun {
        records,
        n_trials,
        estimate,
    })
}

#[derive(Clone, Debug)]
pub struct VerificationRun {
    /// Records with a coincidence only.
    pub records: Vec<VerificationRecord>,
    pub n_trials: u64,
    pub estimate: VerificationEstimate,
}

pub fn run_verification(
    params: &ExperimentParams,
    basis: VerificationBasis,
    settings: &RunSettings,
) -> Result<VerificationRun> {
    params.validate()?;
    let (records, n_trials) = run_batches(
        settings,
        |rng| run_verification_trial(params, basis, settings.mode, rng),
        |r| r.coincidence().is_some(),
        |kept| VerificationEstimate::from_records(kept).is_ok_and(|e| e.n_effective >= settings.target_ess),
    )?;
    let estimate = VerificationEstimate::from_records(&records)?;
    Ok(VerificationRun {
        records,
        n_trials,
        estimate,
    })
}
