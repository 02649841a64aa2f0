use rand::Rng;

use crate::error::Result;
use crate::memory::sample_index;
use crate::params::{wcp_distribution, ExperimentParams};
use crate::sources::excitation_distribution;

use super::teleport::{bsm_branches, prepare_bsm_input};
use super::{InputState, SamplingMode};

/// Share of the conditioned proposal that follows the natural distribution,
/// which keeps every configuration reachable and bounds weights by its inverse.
pub const DEFENSIVE_FRACTION: f64 = 0.02;

/// Photon content of the sources in one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SourceConfig {
    /// Total spin excitations of the two ensembles (= anti-Stokes photons).
    pub excitations: u8,
    /// Photons in the weak coherent pulse.
    pub input_photons: u8,
}

/// Natural probability `p` and proposal probability `q` of every source
/// configuration.
#[derive(Clone, Debug)]
pub struct SourceProposal {
    entries: Vec<(SourceConfig, f64, f64)>,
}

impl SourceProposal {
    /// Teleportation of `input`. The tilt is the BSM herald probability at
    /// zero phase times the chance of a Stokes photon at zero storage time,
    /// so it does not depend on the storage time and runs at different times
    /// share their random numbers.
    pub fn teleportation(params: &ExperimentParams, input: &InputState, mode: SamplingMode) -> Result<Self> {
        let pn = excitation_distribution(params.chi);
        let pw = wcp_distribution(params.mu);
        let qubit = input.qubit();
        let mut natural = Vec::new();
        for (n, p_n) in pn.iter().enumerate() {
            for (w, p_w) in pw.iter().enumerate() {
                let config = SourceConfig {
                    excitations: n as u8,
                    input_photons: w as u8,
                };
                let p = p_n * p_w;
                let tilt = if mode == SamplingMode::Conditioned && p > 0.0 {
                    let state = prepare_bsm_input(params, &qubit, config, 0.0)?;
                    let herald: f64 = bsm_branches(params, &state)?
                        .iter()
                        .map(|b| b.weight * (b.p_plus + b.p_minus))
                        .sum();
                    let stokes = if n >= 1 { params.gamma0 } else { 0.0 } + params.background_s;
                    herald * stokes
                } else {
                    0.0
                };
                natural.push((config, p, tilt));
            }
        }
        Ok(SourceProposal::build(natural, mode))
    }

    /// Entanglement verification: only the resource, tilted toward `N >= 1`.
    pub fn verification(params: &ExperimentParams, mode: SamplingMode) -> Self {
        let natural = excitation_distribution(params.chi)
            .iter()
            .enumerate()
            .map(|(n, p)| {
                let config = SourceConfig {
                    excitations: n as u8,
                    input_photons: 0,
                };
                (config, *p, if n >= 1 { 1.0 } else { 0.0 })
            })
            .collect();
        SourceProposal::build(natural, mode)
    }

    fn build(natural: Vec<(SourceConfig, f64, f64)>, mode: SamplingMode) -> Self {
        let tilted_mass: f64 = natural.iter().map(|(_, p, g)| p * g).sum();
        let entries = natural
            .into_iter()
            .filter(|(_, p, _)| *p > 0.0)
            .map(|(c, p, g)| {
                let q = match mode {
                    SamplingMode::Raw => p,
                    SamplingMode::Conditioned if tilted_mass > 0.0 => {
                        DEFENSIVE_FRACTION * p + (1.0 - DEFENSIVE_FRACTION) * p * g / tilted_mass
                    }
                    SamplingMode::Conditioned => p,
                };
                (c, p, q)
            })
            .collect();
        SourceProposal { entries }
    }

    /// `(config, natural probability, proposal probability)`.
    pub fn entries(&self) -> &[(SourceConfig, f64, f64)] {
        &self.entries
    }

    /// Draw a configuration and its importance weight `p / q`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (SourceConfig, f64) {
        let q: Vec<f64> = self.entries.iter().map(|e| e.2).collect();
        let (c, p, q) = self.entries[sample_index(&q, rng)];
        (c, p / q)
    }
}
