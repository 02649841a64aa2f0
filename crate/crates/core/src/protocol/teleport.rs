use rand::Rng;

use crate::detection::{
    analyzer_distribution, apply_bsm_optics, classify_bsm, detection_groups, herald_probabilities, pattern_distribution,
    AnalyzerBasis, AnalyzerProbs, BsmOutcome, Detector, DetectorModel, BSM_DETECTORS, BSM_MONITORS,
};
use crate::error::Result;
use crate::fock::{FockState, PolarizationQubit};
use crate::memory::{
    apply_feed_forward, apply_readout_noise, check_storage_time, gamma_at, retrieve, sample_index,
    background_distribution, pauli_distribution, sample_readout_noise, spin_loss_branches, Background, Pauli,
    ReadoutNoise,
};
use crate::params::ExperimentParams;
use crate::sources::{resource_sector, sample_phase, wcp_state};

use super::{AnalyzerClick, InputState, SamplingMode, SourceConfig, SourceProposal};

/// One teleportation run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub input: InputState,
    pub storage_time: f64,
    pub bsm: BsmOutcome,
    pub analyzer_basis: AnalyzerBasis,
    /// `None` when the BSM did not herald.
    pub analyzer_click: Option<AnalyzerClick>,
    pub weight: f64,
    pub config: SourceConfig,
}

impl TrialRecord {
    /// A BSM herald together with at least one analyzer click.
    pub fn is_threefold(&self) -> bool {
        matches!(
            self.analyzer_click,
            Some(AnalyzerClick::Correct | AnalyzerClick::Wrong | AnalyzerClick::Both)
        )
    }
}

/// Resource and input pulse for a fixed source configuration, before the BSM.
pub(crate) fn prepare_bsm_input(
    params: &ExperimentParams,
    qubit: &PolarizationQubit,
    config: SourceConfig,
    phase: f64,
) -> Result<FockState> {
    let n_max = (config.excitations + config.input_photons).max(2);
    let resource = resource_sector(config.excitations, phase, n_max)?;
    let pulse = wcp_state(config.input_photons, qubit, params.zeta, n_max)?;
    resource.tensor(&pulse)
}

/// Photon-number group at the BSM detectors with the spin state it leaves.
pub(crate) struct BsmBranch {
    /// Unnormalized spin state.
    pub rest: FockState,
    pub weight: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    pub photons: [u32; 6],
}

pub(crate) fn bsm_branches(params: &ExperimentParams, state: &FockState) -> Result<Vec<BsmBranch>> {
    let model = DetectorModel::from_params(params);
    let optics = apply_bsm_optics(state, params.leak_pbs)?;
    Ok(detection_groups(&optics, &BSM_MONITORS)?
        .into_iter()
        .map(|g| {
            let (p_plus, p_minus) = herald_probabilities(&g.photons, &model);
            BsmBranch {
                weight: g.rest.norm_sqr(),
                rest: g.rest,
                p_plus,
                p_minus,
                photons: g.photons,
            }
        })
        .collect())
}

/// Storage and retrieval of a normalized spin state: `(probability,
/// normalized Stokes state)` per loss branch, before readout noise.
pub(crate) fn retrieved_branches(spin: &FockState, t: f64, params: &ExperimentParams) -> Result<Vec<(f64, FockState)>> {
    let mut out = Vec::new();
    for b in spin_loss_branches(spin, gamma_at(t, params))? {
        let p = b.norm_sqr();
        if let Some(n) = b.normalized() {
            out.push((p, retrieve(&n)?));
        }
    }
    Ok(out)
}

/// [`retrieved_branches`] followed by a fixed noise realization.
pub(crate) fn readout_branches(
    spin: &FockState,
    t: f64,
    params: &ExperimentParams,
    noise: ReadoutNoise,
) -> Result<Vec<(f64, FockState)>> {
    retrieved_branches(spin, t, params)?
        .into_iter()
        .map(|(p, s)| Ok((p, apply_readout_noise(&s, noise)?)))
        .collect()
}

/// Readout branches for one trial. Raw mode draws the whole noise
/// realization; conditioned mode draws only the Pauli error and enumerates the
/// background photon, whose rare branch otherwise dominates the weight spread
/// of trials without a stored excitation. Probabilities sum to one.
pub(crate) fn trial_readouts<R: Rng + ?Sized>(
    spin: &FockState,
    t: f64,
    params: &ExperimentParams,
    mode: SamplingMode,
    rng: &mut R,
) -> Result<Vec<(f64, FockState)>> {
    match mode {
        SamplingMode::Raw => readout_branches(spin, t, params, sample_readout_noise(t, params, rng)),
        SamplingMode::Conditioned => {
            let pauli = Pauli::ALL[sample_index(&pauli_distribution(t, params), rng)];
            let retrieved = retrieved_branches(spin, t, params)?;
            let mut out = Vec::new();
            let backgrounds = [Background::None, Background::H, Background::V];
            for (background, pb) in backgrounds.into_iter().zip(background_distribution(params)) {
                if pb <= 0.0 {
                    continue;
                }
                let noise = ReadoutNoise { pauli, background };
                for (p, s) in &retrieved {
                    out.push((pb * p, apply_readout_noise(s, noise)?));
                }
            }
            Ok(out)
        }
    }
}

/// Analyzer probabilities after the feed-forward correction.
pub(crate) fn corrected_analysis(
    stokes: &FockState,
    outcome: BsmOutcome,
    basis: &AnalyzerBasis,
    params: &ExperimentParams,
) -> Result<AnalyzerProbs> {
    analyzer_distribution(&apply_feed_forward(stokes, outcome)?, basis, params)
}

fn click_for(port_transmitted: bool, input: &InputState) -> AnalyzerClick {
    let correct_is_transmitted = input.correct_port() == Detector::AT;
    if port_transmitted == correct_is_transmitted {
        AnalyzerClick::Correct
    } else {
        AnalyzerClick::Wrong
    }
}

/// Simulate one teleportation attempt at storage time `t` (microseconds).
pub fn run_teleportation_trial<R: Rng + ?Sized>(
    params: &ExperimentParams,
    input: &InputState,
    t: f64,
    mode: SamplingMode,
    rng: &mut R,
) -> Result<TrialRecord> {
    params.validate()?;
    check_storage_time(t)?;
    let proposal = SourceProposal::teleportation(params, input, mode)?;
    teleportation_trial(params, input, t, &proposal, mode, rng)
}

/// One attempt with a prebuilt proposal; `params` and `t` must be valid.
pub(crate) fn teleportation_trial<R: Rng + ?Sized>(
    params: &ExperimentParams,
    input: &InputState,
    t: f64,
    proposal: &SourceProposal,
    mode: SamplingMode,
    rng: &mut R,
) -> Result<TrialRecord> {
    let (config, mut weight) = proposal.sample(rng);
    let phase = sample_phase(params.phase_sigma, rng)?;
    let basis = input.basis();
    let mut record = TrialRecord {
        input: *input,
        storage_time: t,
        bsm: BsmOutcome::NoResult,
        analyzer_basis: basis,
        analyzer_click: None,
        weight,
        config,
    };

    let state = prepare_bsm_input(params, &input.qubit(), config, phase)?;
    let branches = bsm_branches(params, &state)?;
    let (branch, outcome) = match mode {
        SamplingMode::Conditioned => {
            let mut choices = Vec::with_capacity(2 * branches.len());
            for (i, b) in branches.iter().enumerate() {
                choices.push((i, BsmOutcome::PsiPlus, b.weight * b.p_plus));
                choices.push((i, BsmOutcome::PsiMinus, b.weight * b.p_minus));
            }
            let total: f64 = choices.iter().map(|c| c.2).sum();
            if total <= 0.0 {
                return Ok(record);
            }
            let w: Vec<f64> = choices.iter().map(|c| c.2).collect();
            let (i, outcome, _) = choices[sample_index(&w, rng)];
            weight *= total;
            (&branches[i], outcome)
        }
        SamplingMode::Raw => {
            let w: Vec<f64> = branches.iter().map(|b| b.weight).collect();
            let b = &branches[sample_index(&w, rng)];
            let patterns = pattern_distribution(&b.photons, &BSM_DETECTORS, &DetectorModel::from_params(params));
            let pw: Vec<f64> = patterns.iter().map(|p| p.1).collect();
            let outcome = classify_bsm(patterns[sample_index(&pw, rng)].0);
            if outcome == BsmOutcome::NoResult {
                return Ok(record);
            }
            (b, outcome)
        }
    };
    record.bsm = outcome;
    record.weight = weight;

    let spin = branch.rest.normalized().expect("branch with positive probability");
    let readouts = trial_readouts(&spin, t, params, mode, rng)?;

    let click = match mode {
        SamplingMode::Conditioned => {
            let mut choices = Vec::with_capacity(3 * readouts.len());
            for (p, stokes) in &readouts {
                let a = corrected_analysis(stokes, outcome, &basis, params)?;
                choices.push((Some(true), p * a.transmitted));
                choices.push((Some(false), p * a.reflected));
                choices.push((None, p * a.both));
            }
            let total: f64 = choices.iter().map(|c| c.1).sum();
            if total <= 0.0 {
                record.analyzer_click = Some(AnalyzerClick::NoClick);
                return Ok(record);
            }
            let w: Vec<f64> = choices.iter().map(|c| c.1).collect();
            record.weight *= total;
            match choices[sample_index(&w, rng)].0 {
                Some(transmitted) => click_for(transmitted, input),
                None => AnalyzerClick::Both,
            }
        }
        SamplingMode::Raw => {
            let w: Vec<f64> = readouts.iter().map(|r| r.0).collect();
            let stokes = &readouts[sample_index(&w, rng)].1;
            let a = corrected_analysis(stokes, outcome, &basis, params)?;
            match sample_index(&[a.none, a.transmitted, a.reflected, a.both], rng) {
                0 => AnalyzerClick::NoClick,
                1 => click_for(true, input),
                2 => click_for(false, input),
                _ => AnalyzerClick::Both,
            }
        }
    };
    record.analyzer_click = Some(click);
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ideal_heralds_are_always_correct() {
        let params = ExperimentParams {
            chi: 0.01,
            mu: 0.01,
            ..ExperimentParams::ideal()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut heralded = 0;
        for _ in 0..2000 {
            let r = run_teleportation_trial(&params, &InputState::H, 0.0, SamplingMode::Conditioned, &mut rng).unwrap();
            if r.is_threefold() && r.config.excitations == 1 && r.config.input_photons == 1 {
                heralded += 1;
                assert_eq!(r.analyzer_click, Some(AnalyzerClick::Correct));
            }
        }
        assert!(heralded > 100);
    }

    #[test]
    fn rejects_negative_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = ExperimentParams::default();
        assert!(run_teleportation_trial(&p, &InputState::H, -1.0, SamplingMode::Raw, &mut rng).is_err());
    }
}
