use rand::Rng;

use crate::detection::{
    analyzer_distribution, detection_groups, pattern_distribution, rotate_to_basis, AnalyzerBasis, ClickPattern,
    Detector, DetectorModel,
};
use crate::error::{Error, Result};
use crate::fock::{FockState, ModeName};
use crate::memory::sample_index;
use crate::params::ExperimentParams;
use crate::sources::{resource_sector, sample_phase};

use super::teleport::trial_readouts;
use super::{SamplingMode, SourceConfig, SourceProposal};

/// Basis of an anti-Stokes/Stokes correlation measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VerificationBasis {
    HV,
    PM,
}

impl VerificationBasis {
    pub fn analyzer(self) -> AnalyzerBasis {
        match self {
            VerificationBasis::HV => AnalyzerBasis::HV,
            VerificationBasis::PM => AnalyzerBasis::PM,
        }
    }

    /// Whether a coincidence of the anti-Stokes port and Stokes port is the
    /// one the ideal resource produces. In H/V the photons are
    /// anti-correlated; in +/- they leave through the same-sign ports.
    pub fn is_desired(self, anti_stokes_transmitted: bool, stokes_transmitted: bool) -> bool {
        match self {
            VerificationBasis::HV => anti_stokes_transmitted != stokes_transmitted,
            VerificationBasis::PM => anti_stokes_transmitted == stokes_transmitted,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            VerificationBasis::HV => "HV",
            VerificationBasis::PM => "PM",
        }
    }
}

impl std::str::FromStr for VerificationBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "HV" | "hv" => Ok(VerificationBasis::HV),
            "PM" | "pm" => Ok(VerificationBasis::PM),
            other => Err(Error::UnknownMode(format!("verification basis '{other}'"))),
        }
    }
}

/// One verification run: which single port fired on each side (`true` =
/// transmitted), or `None` when that side did not give exactly one click.
#[derive(Clone, Debug, PartialEq)]
pub struct VerificationRecord {
    pub basis: VerificationBasis,
    pub anti_stokes: Option<bool>,
    pub stokes: Option<bool>,
    pub weight: f64,
    pub config: SourceConfig,
}

impl VerificationRecord {
    pub fn coincidence(&self) -> Option<(bool, bool)> {
        Some((self.anti_stokes?, self.stokes?))
    }
}

const AS_MONITORS: [(ModeName, Detector); 2] = [(ModeName::Out1H, Detector::B1H), (ModeName::Out1V, Detector::B1V)];

/// Anti-Stokes analysis: exactly-one-click groups as
/// `(transmitted, probability, unnormalized spin state)`.
pub(crate) fn anti_stokes_branches(
    resource: &FockState,
    basis: VerificationBasis,
    params: &ExperimentParams,
) -> Result<Vec<(bool, f64, FockState)>> {
    let rotated = rotate_to_basis(resource, ModeName::AsH, ModeName::AsV, &basis.analyzer(), params.leak_pbs)?;
    let renamed = rotated.rename(&[(ModeName::AsH, ModeName::Out1H), (ModeName::AsV, ModeName::Out1V)])?;
    let model = DetectorModel::from_params(params);
    let mut out = Vec::new();
    for g in detection_groups(&renamed, &AS_MONITORS)? {
        let w = g.rest.norm_sqr();
        for (pattern, p) in pattern_distribution(&g.photons, &[Detector::B1H, Detector::B1V], &model) {
            let transmitted = if pattern == ClickPattern::of(&[Detector::B1H]) {
                true
            } else if pattern == ClickPattern::of(&[Detector::B1V]) {
                false
            } else {
                continue;
            };
            if w * p > 0.0 {
                out.push((transmitted, w * p, g.rest.clone()));
            }
        }
    }
    Ok(out)
}

/// Simulate one verification run with immediate readout.
pub fn run_verification_trial<R: Rng + ?Sized>(
    params: &ExperimentParams,
    basis: VerificationBasis,
    mode: SamplingMode,
    rng: &mut R,
) -> Result<VerificationRecord> {
    params.validate()?;
    let proposal = SourceProposal::verification(params, mode);
    let (config, weight) = proposal.sample(rng);
    let phase = sample_phase(params.phase_sigma, rng)?;
    let mut record = VerificationRecord {
        basis,
        anti_stokes: None,
        stokes: None,
        weight,
        config,
    };
    let resource = resource_sector(config.excitations, phase, config.excitations.max(2))?;
    let as_branches = anti_stokes_branches(&resource, basis, params)?;
    let as_total: f64 = as_branches.iter().map(|b| b.1).sum();
    let chosen = match mode {
        SamplingMode::Conditioned => {
            if as_total <= 0.0 {
                return Ok(record);
            }
            record.weight *= as_total;
            let w: Vec<f64> = as_branches.iter().map(|b| b.1).collect();
            &as_branches[sample_index(&w, rng)]
        }
        SamplingMode::Raw => {
            let mut w: Vec<f64> = as_branches.iter().map(|b| b.1).collect();
            w.push((1.0 - as_total).max(0.0));
            let i = sample_index(&w, rng);
            if i == as_branches.len() {
                return Ok(record);
            }
            &as_branches[i]
        }
    };
    record.anti_stokes = Some(chosen.0);

    let spin = chosen.2.normalized().expect("positive probability");
    let mut choices = Vec::new();
    for (p, stokes) in trial_readouts(&spin, 0.0, params, mode, rng)? {
        let a = analyzer_distribution(&stokes, &basis.analyzer(), params)?;
        choices.push((Some(true), p * a.transmitted));
        choices.push((Some(false), p * a.reflected));
        choices.push((None, p * (a.both + a.none)));
    }
    let w: Vec<f64> = match mode {
        SamplingMode::Raw => choices.iter().map(|c| c.1).collect(),
        SamplingMode::Conditioned => {
            let single: f64 = choices.iter().filter(|c| c.0.is_some()).map(|c| c.1).sum();
            if single <= 0.0 {
                return Ok(record);
            }
            record.weight *= single;
            choices.iter().map(|c| if c.0.is_some() { c.1 } else { 0.0 }).collect()
        }
    };
    record.stokes = choices[sample_index(&w, rng)].0;
    Ok(record)
}

/// Weighted correlation counts of a verification run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerificationEstimate {
    pub n_desired: f64,
    pub n_unwanted: f64,
    pub visibility: f64,
    pub snr: f64,
    /// Standard error of the visibility.
    pub std_err: f64,
    pub n_effective: f64,
}

impl VerificationEstimate {
    pub fn from_records(records: &[VerificationRecord]) -> Result<Self> {
        let (mut desired, mut unwanted, mut w2) = (0.0, 0.0, 0.0);
        for r in records {
            if let Some((a, s)) = r.coincidence() {
                if r.basis.is_desired(a, s) {
                    desired += r.weight;
                } else {
                    unwanted += r.weight;
                }
                w2 += r.weight * r.weight;
            }
        }
        let total = desired + unwanted;
        if total <= 0.0 {
            return Err(Error::NoHeraldedTrials);
        }
        let n_eff = total * total / w2;
        let f = desired / total;
        Ok(VerificationEstimate {
            n_desired: desired,
            n_unwanted: unwanted,
            visibility: (desired - unwanted) / total,
            snr: if unwanted > 0.0 { desired / unwanted } else { f64::INFINITY },
            std_err: 2.0 * (f * (1.0 - f) / n_eff).sqrt(),
            n_effective: n_eff,
        })
    }
}

/// Monte Carlo correlation measurement of the resource in `basis`
/// (conditioned sampling, `n_trials` trials, single thread).
pub fn run_entanglement_verification<R: Rng + ?Sized>(
    params: &ExperimentParams,
    basis: VerificationBasis,
    n_trials: usize,
    rng: &mut R,
) -> Result<VerificationEstimate> {
    let records = (0..n_trials)
        .map(|_| run_verification_trial(params, basis, SamplingMode::Conditioned, rng))
        .collect::<Result<Vec<_>>>()?;
    VerificationEstimate::from_records(&records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ideal_resource_has_unit_visibility() {
        let params = ExperimentParams {
            chi: 1e-4,
            ..ExperimentParams::ideal()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for basis in [VerificationBasis::HV, VerificationBasis::PM] {
            let v = run_entanglement_verification(&params, basis, 3000, &mut rng).unwrap();
            assert!(v.visibility > 0.999, "{basis:?} {v:?}");
        }
    }
}
