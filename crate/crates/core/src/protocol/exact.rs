//! Exact averages over every source configuration, BSM outcome, loss branch
//! and noise realization. The Gaussian phase is integrated by
//! [`phase_quadrature`](super::phase_quadrature).

use crate::detection::{analyzer_distribution, BsmOutcome, Detector};
use crate::error::Result;
use crate::memory::{apply_readout_noise, check_storage_time, readout_noise_branches};
use crate::params::ExperimentParams;
use crate::sources::{excitation_distribution, resource_sector};

use super::teleport::{bsm_branches, corrected_analysis, prepare_bsm_input, retrieved_branches};
use super::verify::anti_stokes_branches;
use super::{phase_quadrature, InputState, SamplingMode, SourceProposal, VerificationBasis};

/// Per-attempt probabilities of a teleportation run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactTeleportation {
    /// BSM herald (either outcome).
    pub p_herald: f64,
    /// Herald from exactly one anti-Stokes photon and one input photon.
    pub p_herald_true: f64,
    /// Three-fold coincidence with the correct port, both-port events counted half.
    pub p_correct: f64,
    pub p_wrong: f64,
    pub fidelity: f64,
}

impl ExactTeleportation {
    pub fn p_threefold(&self) -> f64 {
        self.p_correct + self.p_wrong
    }

    /// Share of heralds produced by the intended one-plus-one photon pair.
    pub fn herald_confidence(&self) -> f64 {
        self.p_herald_true / self.p_herald
    }
}

/// Source configurations rarer than this fraction of the configurations that
/// can herald a stored excitation are skipped. Their share of any three-fold
/// rate is below a few parts in 10^7 at realistic parameters, and they carry
/// most of the cost (up to six photons at the BSM).
pub const CONFIG_CUTOFF: f64 = 1e-7;

pub fn exact_teleportation(params: &ExperimentParams, input: &InputState, t: f64) -> Result<ExactTeleportation> {
    params.validate()?;
    check_storage_time(t)?;
    let qubit = input.qubit();
    let basis = input.basis();
    let correct_transmitted = input.correct_port() == Detector::AT;
    let noise = readout_noise_branches(t, params);
    let mut out = ExactTeleportation {
        p_herald: 0.0,
        p_herald_true: 0.0,
        p_correct: 0.0,
        p_wrong: 0.0,
        fidelity: 0.0,
    };
    let proposal = SourceProposal::teleportation(params, input, SamplingMode::Raw)?;
    let useful: f64 = proposal
        .entries()
        .iter()
        .filter(|(c, _, _)| c.excitations >= 1 && c.excitations + c.input_photons >= 2)
        .map(|e| e.1)
        .sum();
    let quadrature = phase_quadrature(params.phase_sigma);
    for &(config, p_config, _) in proposal.entries() {
        if p_config < CONFIG_CUTOFF * useful {
            continue;
        }
        // Without stored excitations the phase has nothing to act on.
        let nodes = if config.excitations == 0 { &[(0.0, 1.0)][..] } else { &quadrature[..] };
        for &(phi, w_phi) in nodes {
            let state = prepare_bsm_input(params, &qubit, config, phi)?;
            for b in bsm_branches(params, &state)? {
                let Some(spin) = b.rest.normalized() else { continue };
                let retrieved = retrieved_branches(&spin, t, params)?;
                for (outcome, p_out) in [(BsmOutcome::PsiPlus, b.p_plus), (BsmOutcome::PsiMinus, b.p_minus)] {
                    let p_h = p_config * w_phi * b.weight * p_out;
                    if p_out <= 0.0 {
                        continue;
                    }
                    out.p_herald += p_h;
                    if config.excitations == 1 && config.input_photons == 1 {
                        out.p_herald_true += p_h;
                    }
                    for &(p_noise, n) in &noise {
                        for (p_loss, retrieved) in &retrieved {
                            let stokes = apply_readout_noise(retrieved, n)?;
                            let a = corrected_analysis(&stokes, outcome, &basis, params)?;
                            let (right, wrong) = if correct_transmitted {
                                (a.transmitted, a.reflected)
                            } else {
                                (a.reflected, a.transmitted)
                            };
                            let p = p_h * p_noise * p_loss;
                            out.p_correct += p * (right + a.both / 2.0);
                            out.p_wrong += p * (wrong + a.both / 2.0);
                        }
                    }
                }
            }
        }
    }
    out.fidelity = out.p_correct / out.p_threefold();
    Ok(out)
}

/// Per-attempt coincidence probabilities of a verification run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactVerification {
    pub p_desired: f64,
    pub p_unwanted: f64,
}

impl ExactVerification {
    pub fn visibility(&self) -> f64 {
        (self.p_desired - self.p_unwanted) / (self.p_desired + self.p_unwanted)
    }

    pub fn snr(&self) -> f64 {
        self.p_desired / self.p_unwanted
    }
}

pub fn exact_verification(params: &ExperimentParams, basis: VerificationBasis) -> Result<ExactVerification> {
    params.validate()?;
    let noise = readout_noise_branches(0.0, params);
    let mut out = ExactVerification {
        p_desired: 0.0,
        p_unwanted: 0.0,
    };
    for (n, p_n) in excitation_distribution(params.chi).iter().enumerate() {
        for (phi, w_phi) in phase_quadrature(params.phase_sigma) {
            let resource = resource_sector(n as u8, phi, (n as u8).max(2))?;
            for (as_port, p_as, rest) in anti_stokes_branches(&resource, basis, params)? {
                let Some(spin) = rest.normalized() else { continue };
                let retrieved = retrieved_branches(&spin, 0.0, params)?;
                for &(p_noise, nz) in &noise {
                    for (p_loss, retrieved) in &retrieved {
                        let stokes = apply_readout_noise(retrieved, nz)?;
                        let a = analyzer_distribution(&stokes, &basis.analyzer(), params)?;
                        let p = p_n * w_phi * p_as * p_noise * p_loss;
                        for (s_port, p_s) in [(true, a.transmitted), (false, a.reflected)] {
                            if basis.is_desired(as_port, s_port) {
                                out.p_desired += p * p_s;
                            } else {
                                out.p_unwanted += p * p_s;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_teleportation_is_perfect() {
        let params = ExperimentParams {
            chi: 1e-5,
            mu: 1e-2,
            ..ExperimentParams::ideal()
        };
        for s in InputState::POLES {
            let e = exact_teleportation(&params, &s, 0.0).unwrap();
            assert!(e.fidelity > 0.99, "{s}: {e:?}");
            if s.kappa() == 0.0 {
                assert!(e.herald_confidence() > 0.99);
            }
        }
    }

    #[test]
    fn ideal_verification_is_noiseless() {
        let params = ExperimentParams {
            chi: 1e-3,
            ..ExperimentParams::ideal()
        };
        for b in [VerificationBasis::HV, VerificationBasis::PM] {
            let v = exact_verification(&params, b).unwrap();
            assert!(v.visibility() > 0.99, "{b:?} {v:?}");
        }
    }
}
