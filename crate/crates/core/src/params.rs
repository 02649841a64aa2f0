//! Physical parameters of one experimental configuration.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_range, check_unit, Error, Result};

/// Anti-Stokes emission probability behind the PBS that the default `chi` reproduces.
pub const DEFAULT_P_AS: f64 = 0.003;
/// Single-photon probability of the weak coherent pulse that the default `mu` reproduces.
pub const DEFAULT_P0: f64 = 0.03;
/// Largest photon number kept in the weak-coherent-pulse distribution.
pub const WCP_MAX_PHOTONS: u8 = 2;

// Outputs of the calibration routines in `protocol::calibrate`, pinned so that
// a default run does not re-calibrate. A unit test checks they are reproduced.
pub const CALIBRATED_DEPOL_READOUT: f64 = 0.115_197_6;
pub const CALIBRATED_PHASE_SIGMA: f64 = 0.353_519_3;
pub const CALIBRATED_TAU_MEM: f64 = 5.342_141;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    /// Per-ensemble spin-flip excitation probability.
    pub chi: f64,
    /// Mean photon number of the weak coherent pulse.
    pub mu: f64,
    /// Retrieval efficiency at zero storage time.
    pub gamma0: f64,
    /// 1/e time of the Gaussian retrieval decay, microseconds.
    pub tau_mem: f64,
    pub eta_coll: f64,
    pub eta_det: f64,
    /// Dark-count probability per detector per trial window.
    pub dark_prob: f64,
    /// Field overlap of the input and anti-Stokes wavepackets at the BSM splitter.
    pub zeta: f64,
    /// Standard deviation of the residual phase between the two write paths, radians.
    pub phase_sigma: f64,
    /// Wrong-port intensity leak of the polarizing splitters in front of the BSM detectors.
    pub leak_pbs: f64,
    /// Wrong-port intensity leak of the retrieved-photon analyzer.
    pub leak_analyzer: f64,
    /// Probability of an uncorrelated, unpolarized photon in the Stokes channel.
    pub background_s: f64,
    /// Probability that a retrieved Stokes photon is fully depolarized.
    pub depol_readout: f64,
    /// Gaussian spin-wave dephasing time, microseconds; infinite disables it.
    pub dephasing_time: f64,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        ExperimentParams {
            chi: chi_for_p_as(DEFAULT_P_AS),
            mu: mu_for_p0(DEFAULT_P0),
            gamma0: 0.30,
            tau_mem: CALIBRATED_TAU_MEM,
            eta_coll: 0.75,
            eta_det: 0.50,
            dark_prob: 1e-5,
            zeta: 0.90,
            phase_sigma: CALIBRATED_PHASE_SIGMA,
            leak_pbs: 0.0,
            leak_analyzer: 0.0,
            background_s: DEFAULT_P_S_TOTAL - DEFAULT_P_AS * 0.30,
            depol_readout: CALIBRATED_DEPOL_READOUT,
            dephasing_time: f64::INFINITY,
        }
    }
}

/// Total Stokes-channel photon probability at zero storage time that the
/// default background reproduces.
pub const DEFAULT_P_S_TOTAL: f64 = 0.004;

/// Every field name accepted by [`ExperimentParams::set`], in declaration order.
pub const PARAM_KEYS: [&str; 14] = [
    "chi",
    "mu",
    "gamma0",
    "tau_mem",
    "eta_coll",
    "eta_det",
    "dark_prob",
    "zeta",
    "phase_sigma",
    "leak_pbs",
    "leak_analyzer",
    "background_s",
    "depol_readout",
    "dephasing_time",
];

impl ExperimentParams {
    /// Noise-free limit: unit efficiencies, no dark counts or leaks, perfect
    /// overlap. `chi` and `mu` keep their defaults.
    pub fn ideal() -> Self {
        ExperimentParams {
            gamma0: 1.0,
            tau_mem: f64::INFINITY,
            eta_coll: 1.0,
            eta_det: 1.0,
            dark_prob: 0.0,
            zeta: 1.0,
            phase_sigma: 0.0,
            background_s: 0.0,
            depol_readout: 0.0,
            ..ExperimentParams::default()
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta_coll * self.eta_det
    }

    pub fn validate(&self) -> Result<()> {
        check_range("chi", self.chi, 0.0, 0.5 - f64::EPSILON)?;
        check_range("mu", self.mu, 0.0, 10.0)?;
        check_unit("gamma0", self.gamma0)?;
        if !(self.tau_mem > 0.0) {
            return Err(Error::ParamOutOfRange {
                name: "tau_mem",
                value: self.tau_mem,
                expected: "> 0".to_owned(),
            });
        }
        check_unit("eta_coll", self.eta_coll)?;
        check_unit("eta_det", self.eta_det)?;
        check_unit("dark_prob", self.dark_prob)?;
        check_unit("zeta", self.zeta)?;
        check_range("phase_sigma", self.phase_sigma, 0.0, 100.0)?;
        check_unit("leak_pbs", self.leak_pbs)?;
        check_unit("leak_analyzer", self.leak_analyzer)?;
        check_unit("background_s", self.background_s)?;
        check_unit("depol_readout", self.depol_readout)?;
        if !(self.dephasing_time > 0.0) {
            return Err(Error::ParamOutOfRange {
                name: "dephasing_time",
                value: self.dephasing_time,
                expected: "> 0 (inf disables)".to_owned(),
            });
        }
        Ok(())
    }

    /// Set a field by name. Returns `false` for an unknown key; range checks
    /// are left to [`validate`](Self::validate).
    pub fn set(&mut self, key: &str, value: f64) -> bool {
        match self.field_mut(key) {
            Some(f) => {
                *f = value;
                true
            }
            None => false,
        }
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        let mut copy = self.clone();
        copy.field_mut(key).map(|f| *f)
    }

    fn field_mut(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "chi" => &mut self.chi,
            "mu" => &mut self.mu,
            "gamma0" => &mut self.gamma0,
            "tau_mem" => &mut self.tau_mem,
            "eta_coll" => &mut self.eta_coll,
            "eta_det" => &mut self.eta_det,
            "dark_prob" => &mut self.dark_prob,
            "zeta" => &mut self.zeta,
            "phase_sigma" => &mut self.phase_sigma,
            "leak_pbs" => &mut self.leak_pbs,
            "leak_analyzer" => &mut self.leak_analyzer,
            "background_s" => &mut self.background_s,
            "depol_readout" => &mut self.depol_readout,
            "dephasing_time" => &mut self.dephasing_time,
            _ => return None,
        })
    }

    /// Probability that a single ensemble emits at least one photon.
    pub fn ensemble_emission_prob(&self) -> f64 {
        1.0 - 1.0 / (1.0 + self.chi + self.chi * self.chi)
    }

    /// Probability of at least one anti-Stokes photon behind the PBS (both ensembles).
    pub fn p_as(&self) -> f64 {
        let vac = 1.0 / (1.0 + self.chi + self.chi * self.chi);
        1.0 - vac * vac
    }

    /// Single-photon probability of the weak coherent pulse.
    pub fn p0(&self) -> f64 {
        wcp_distribution(self.mu)[1]
    }
}

impl fmt::Display for ExperimentParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for key in PARAM_KEYS {
            writeln!(f, "{key} = {}", self.get(key).unwrap_or(f64::NAN))?;
        }
        Ok(())
    }
}

/// Per-ensemble `chi` whose two-ensemble emission probability equals `p_as`.
pub fn chi_for_p_as(p_as: f64) -> f64 {
    // 1 + chi + chi^2 = (1 - p_as)^(-1/2)
    let c = (1.0 - p_as).powf(-0.5);
    (-1.0 + (1.0 + 4.0 * (c - 1.0)).sqrt()) / 2.0
}

/// Mean photon number whose truncated Poisson distribution has `P(1) = p0`.
pub fn mu_for_p0(p0: f64) -> f64 {
    // mu = p0 (1 + mu + mu^2/2), smaller root
    if p0 == 0.0 {
        return 0.0;
    }
    let a = p0 / 2.0;
    let b = p0 - 1.0;
    let c = p0;
    (-b - (b * b - 4.0 * a * c).sqrt()) / (2.0 * a)
}

/// Poisson(mu) restricted to `0..=WCP_MAX_PHOTONS` and renormalized.
pub fn wcp_distribution(mu: f64) -> [f64; WCP_MAX_PHOTONS as usize + 1] {
    let mut out = [0.0; WCP_MAX_PHOTONS as usize + 1];
    let mut term = 1.0;
    for (n, slot) in out.iter_mut().enumerate() {
        if n > 0 {
            term *= mu / n as f64;
        }
        *slot = term;
    }
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= total);
    out
}
