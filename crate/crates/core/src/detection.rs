//! Threshold detectors, the linear-optics Bell-state measurement and the
//! polarization analyzer of the retrieved photon.
//!
//! BSM arrangement: the input pulse (`IN_*`) and the anti-Stokes photon
//! (`AS_*`) meet on a 50:50 splitter; output port 1 carries on as `OUT1_*`,
//! port 2 as `OUT2_*`, and a PBS behind each port feeds detectors
//! `B1H, B1V, B2H, B2V`. The analyzer rotates `(S_H, S_V)` so that the
//! target polarization leaves through the transmitted port `AT`.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fock::{apply_beam_splitter, apply_polarization, FockState, ModeLabel, ModeMatrix, ModeName, PolarizationQubit};
use crate::memory::sample_index;
use crate::params::ExperimentParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Detector {
    B1H,
    B1V,
    B2H,
    B2V,
    AT,
    AR,
}

impl Detector {
    pub const ALL: [Detector; 6] = [
        Detector::B1H,
        Detector::B1V,
        Detector::B2H,
        Detector::B2V,
        Detector::AT,
        Detector::AR,
    ];

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

/// Set of detectors that fired in one trial window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClickPattern(u8);

impl ClickPattern {
    pub fn empty() -> Self {
        ClickPattern(0)
    }

    pub fn of(detectors: &[Detector]) -> Self {
        ClickPattern(detectors.iter().fold(0, |acc, d| acc | d.bit()))
    }

    pub fn contains(self, d: Detector) -> bool {
        self.0 & d.bit() != 0
    }

    pub fn insert(&mut self, d: Detector) {
        self.0 |= d.bit();
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn restricted_to(self, detectors: &[Detector]) -> Self {
        ClickPattern(self.0 & ClickPattern::of(detectors).0)
    }

    pub fn fired(self) -> impl Iterator<Item = Detector> {
        Detector::ALL.into_iter().filter(move |d| self.contains(*d))
    }
}

impl fmt::Display for ClickPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.fired().map(|d| format!("{d:?}")).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BsmOutcome {
    PsiPlus,
    PsiMinus,
    NoResult,
}

pub const BSM_DETECTORS: [Detector; 4] = [Detector::B1H, Detector::B1V, Detector::B2H, Detector::B2V];

pub const BSM_MONITORS: [(ModeName, Detector); 4] = [
    (ModeName::Out1H, Detector::B1H),
    (ModeName::Out1V, Detector::B1V),
    (ModeName::Out2H, Detector::B2H),
    (ModeName::Out2V, Detector::B2V),
];

pub const ANALYZER_MONITORS: [(ModeName, Detector); 2] = [(ModeName::SH, Detector::AT), (ModeName::SV, Detector::AR)];

/// Efficiency and dark-count model shared by every detector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorModel {
    pub eta: f64,
    pub dark: f64,
}

impl DetectorModel {
    pub fn from_params(params: &ExperimentParams) -> Self {
        DetectorModel {
            eta: params.eta(),
            dark: params.dark_prob,
        }
    }

    pub fn ideal() -> Self {
        DetectorModel { eta: 1.0, dark: 0.0 }
    }

    fn no_click(&self, photons: u32) -> f64 {
        (1.0 - self.eta).powi(photons as i32) * (1.0 - self.dark)
    }
}

/// Photon numbers reaching each detector, with the unnormalized state of the
/// unmonitored modes. Different groups leave orthogonal records, so they add
/// incoherently.
#[derive(Clone, Debug)]
pub struct DetectionGroup {
    pub photons: [u32; 6],
    pub rest: FockState,
}

pub fn detection_groups(state: &FockState, monitored: &[(ModeName, Detector)]) -> Result<Vec<DetectionGroup>> {
    for (name, _) in monitored {
        if !state.has_name(*name) {
            return Err(Error::UnknownMode(name.to_string()));
        }
    }
    let labels: Vec<ModeLabel> = state
        .modes()
        .iter()
        .filter(|m| monitored.iter().any(|(n, _)| *n == m.name))
        .copied()
        .collect();
    let detector_of: Vec<Detector> = labels
        .iter()
        .map(|l| monitored.iter().find(|(n, _)| *n == l.name).expect("monitored").1)
        .collect();
    let groups = state.split_by(&labels)?;
    Ok(groups
        .into_iter()
        .map(|(occ, rest)| {
            let mut photons = [0u32; 6];
            for (n, d) in occ.iter().zip(&detector_of) {
                photons[*d as usize] += *n as u32;
            }
            DetectionGroup { photons, rest }
        })
        .collect())
}

/// Exact click-pattern distribution over `detectors` for fixed photon numbers.
pub fn pattern_distribution(photons: &[u32; 6], detectors: &[Detector], model: &DetectorModel) -> Vec<(ClickPattern, f64)> {
    let k = detectors.len();
    let mut out = Vec::with_capacity(1 << k);
    for mask in 0u32..(1 << k) {
        let mut p = 1.0;
        let mut pattern = ClickPattern::empty();
        for (i, d) in detectors.iter().enumerate() {
            let silent = model.no_click(photons[*d as usize]);
            if mask & (1 << i) != 0 {
                p *= 1.0 - silent;
                pattern.insert(*d);
            } else {
                p *= silent;
            }
        }
        if p > 0.0 {
            out.push((pattern, p));
        }
    }
    out
}

fn monitored_detectors(monitored: &[(ModeName, Detector)]) -> Vec<Detector> {
    let mut ds: Vec<Detector> = monitored.iter().map(|(_, d)| *d).collect();
    ds.sort();
    ds.dedup();
    ds
}

/// Exact distribution of click patterns, normalized to the state's norm.
pub fn click_distribution(
    state: &FockState,
    monitored: &[(ModeName, Detector)],
    model: &DetectorModel,
) -> Result<Vec<(ClickPattern, f64)>> {
    let detectors = monitored_detectors(monitored);
    let total = state.norm_sqr();
    let mut acc: std::collections::BTreeMap<ClickPattern, f64> = Default::default();
    for g in detection_groups(state, monitored)? {
        let w = g.rest.norm_sqr() / total;
        for (pattern, p) in pattern_distribution(&g.photons, &detectors, model) {
            *acc.entry(pattern).or_insert(0.0) += w * p;
        }
    }
    Ok(acc.into_iter().collect())
}

pub fn sample_clicks<R: Rng + ?Sized>(
    state: &FockState,
    monitored: &[(ModeName, Detector)],
    model: &DetectorModel,
    rng: &mut R,
) -> Result<ClickPattern> {
    let dist = click_distribution(state, monitored, model)?;
    let weights: Vec<f64> = dist.iter().map(|(_, p)| *p).collect();
    Ok(dist[sample_index(&weights, rng)].0)
}

/// Bell-state signature of a pattern; only the four BSM detectors are looked at.
pub fn classify_bsm(pattern: ClickPattern) -> BsmOutcome {
    use Detector::*;
    let p = pattern.restricted_to(&BSM_DETECTORS);
    if p == ClickPattern::of(&[B1H, B2V]) || p == ClickPattern::of(&[B1V, B2H]) {
        BsmOutcome::PsiMinus
    } else if p == ClickPattern::of(&[B1H, B1V]) || p == ClickPattern::of(&[B2H, B2V]) {
        BsmOutcome::PsiPlus
    } else {
        BsmOutcome::NoResult
    }
}

/// Small coherent rotation that sends intensity `leak` into the wrong port.
pub fn leak_matrix(leak: f64) -> ModeMatrix {
    let s = leak.sqrt();
    let c = (1.0 - leak).sqrt();
    [
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]
}

/// 50:50 interference of the input and anti-Stokes photons followed by the
/// port PBSs. The state must carry `IN_*` and `AS_*` modes.
pub fn apply_bsm_optics(state: &FockState, leak_pbs: f64) -> Result<FockState> {
    let mixed = apply_beam_splitter(state, ModeName::InH, ModeName::AsH, 0.5)?;
    let mixed = apply_beam_splitter(&mixed, ModeName::InV, ModeName::AsV, 0.5)?;
    let mut out = mixed.rename(&[
        (ModeName::InH, ModeName::Out1H),
        (ModeName::InV, ModeName::Out1V),
        (ModeName::AsH, ModeName::Out2H),
        (ModeName::AsV, ModeName::Out2V),
    ])?;
    if leak_pbs > 0.0 {
        let m = leak_matrix(leak_pbs);
        out = apply_polarization(&out, ModeName::Out1H, ModeName::Out1V, &m)?;
        out = apply_polarization(&out, ModeName::Out2H, ModeName::Out2V, &m)?;
    }
    Ok(out)
}

/// Probabilities of the two identified Bell outcomes for fixed photon numbers
/// at the BSM detectors: `(PsiPlus, PsiMinus)`.
pub fn herald_probabilities(photons: &[u32; 6], model: &DetectorModel) -> (f64, f64) {
    let mut plus = 0.0;
    let mut minus = 0.0;
    for (pattern, p) in pattern_distribution(photons, &BSM_DETECTORS, model) {
        match classify_bsm(pattern) {
            BsmOutcome::PsiPlus => plus += p,
            BsmOutcome::PsiMinus => minus += p,
            BsmOutcome::NoResult => {}
        }
    }
    (plus, minus)
}

/// Measurement basis of the retrieved-photon analyzer. The transmitted port
/// `AT` projects onto [`transmitted_state`](AnalyzerBasis::transmitted_state).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnalyzerBasis {
    HV,
    PM,
    RL,
    Custom(PolarizationQubit),
}

impl AnalyzerBasis {
    pub fn transmitted_state(&self) -> PolarizationQubit {
        match self {
            AnalyzerBasis::HV => PolarizationQubit::h(),
            AnalyzerBasis::PM => PolarizationQubit::plus(),
            AnalyzerBasis::RL => PolarizationQubit::r(),
            AnalyzerBasis::Custom(q) => *q,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AnalyzerBasis::HV => "HV",
            AnalyzerBasis::PM => "PM",
            AnalyzerBasis::RL => "RL",
            AnalyzerBasis::Custom(_) => "custom",
        }
    }
}

/// Rotate a polarization pair into the analyzer frame, including the leak.
pub fn rotate_to_basis(state: &FockState, h: ModeName, v: ModeName, basis: &AnalyzerBasis, leak: f64) -> Result<FockState> {
    let mut out = apply_polarization(state, h, v, &basis.transmitted_state().analyzer_matrix())?;
    if leak > 0.0 {
        out = apply_polarization(&out, h, v, &leak_matrix(leak))?;
    }
    Ok(out)
}

/// Analyzer outcome probabilities: `(none, AT only, AR only, both)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AnalyzerProbs {
    pub none: f64,
    pub transmitted: f64,
    pub reflected: f64,
    pub both: f64,
}

impl AnalyzerProbs {
    pub fn any_click(&self) -> f64 {
        self.transmitted + self.reflected + self.both
    }
}

fn stokes_pair(state: &FockState) -> Result<FockState> {
    if !state.has_name(ModeName::SH) && !state.has_name(ModeName::SV) {
        return Err(Error::MissingStokesModes);
    }
    Ok(state
        .with_mode(ModeLabel::matched(ModeName::SH))
        .with_mode(ModeLabel::matched(ModeName::SV)))
}

pub fn analyzer_distribution(
    state: &FockState,
    basis: &AnalyzerBasis,
    params: &ExperimentParams,
) -> Result<AnalyzerProbs> {
    let rotated = rotate_to_basis(&stokes_pair(state)?, ModeName::SH, ModeName::SV, basis, params.leak_analyzer)?;
    let mut out = AnalyzerProbs::default();
    for (pattern, p) in click_distribution(&rotated, &ANALYZER_MONITORS, &DetectorModel::from_params(params))? {
        match (pattern.contains(Detector::AT), pattern.contains(Detector::AR)) {
            (false, false) => out.none += p,
            (true, false) => out.transmitted += p,
            (false, true) => out.reflected += p,
            (true, true) => out.both += p,
        }
    }
    Ok(out)
}

pub fn analyze_polarization<R: Rng + ?Sized>(
    state: &FockState,
    basis: &AnalyzerBasis,
    params: &ExperimentParams,
    rng: &mut R,
) -> Result<ClickPattern> {
    let rotated = rotate_to_basis(&stokes_pair(state)?, ModeName::SH, ModeName::SV, basis, params.leak_analyzer)?;
    sample_clicks(&rotated, &ANALYZER_MONITORS, &DetectorModel::from_params(params), rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{bell_decompose, BellState, QubitModes};
    use crate::memory::{S_H, S_V};
    use crate::sources::{AS_H, AS_V, IN_H, IN_V};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use Detector::*;

    fn ideal_params() -> ExperimentParams {
        ExperimentParams::ideal()
    }

    #[test]
    fn vacuum_never_clicks() {
        let s = FockState::vacuum(&[S_H, S_V], 2).unwrap();
        let d = click_distribution(&s, &ANALYZER_MONITORS, &DetectorModel::ideal()).unwrap();
        assert_eq!(d, vec![(ClickPattern::empty(), 1.0)]);
    }

    #[test]
    fn single_photon_click_rate() {
        let s = FockState::basis(&[S_H, S_V], 2, &[(S_H, 1)]).unwrap();
        let model = DetectorModel { eta: 0.375, dark: 0.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| sample_clicks(&s, &ANALYZER_MONITORS, &model, &mut rng).unwrap().contains(AT))
            .count();
        assert!((hits as f64 / n as f64 - 0.375).abs() < 0.005);
    }

    #[test]
    fn threshold_behaviour() {
        let s = FockState::basis(&[S_H, S_V], 2, &[(S_H, 2)]).unwrap();
        let d = click_distribution(&s, &ANALYZER_MONITORS, &DetectorModel::ideal()).unwrap();
        assert_eq!(d, vec![(ClickPattern::of(&[AT]), 1.0)]);
    }

    #[test]
    fn classifier_truth_table() {
        assert_eq!(classify_bsm(ClickPattern::of(&[B1H, B2V])), BsmOutcome::PsiMinus);
        assert_eq!(classify_bsm(ClickPattern::of(&[B1V, B2H])), BsmOutcome::PsiMinus);
        assert_eq!(classify_bsm(ClickPattern::of(&[B1H, B1V])), BsmOutcome::PsiPlus);
        assert_eq!(classify_bsm(ClickPattern::of(&[B2H, B2V])), BsmOutcome::PsiPlus);
        assert_eq!(classify_bsm(ClickPattern::of(&[B1H, B2H])), BsmOutcome::NoResult);
        assert_eq!(classify_bsm(ClickPattern::of(&[B1H])), BsmOutcome::NoResult);
        assert_eq!(classify_bsm(ClickPattern::of(&[B1H, B1V, B2H])), BsmOutcome::NoResult);
        assert_eq!(classify_bsm(ClickPattern::of(&[B1H, B1V, AT])), BsmOutcome::PsiPlus);
        assert_eq!(ClickPattern::of(&[B1H, AR]).to_string(), "{B1H,AR}");
    }

    fn bell_input(which: BellState) -> FockState {
        let c = which.components();
        let modes = [IN_H, IN_V, AS_H, AS_V];
        let terms = [
            (vec![1, 0, 1, 0], c[0]),
            (vec![1, 0, 0, 1], c[1]),
            (vec![0, 1, 1, 0], c[2]),
            (vec![0, 1, 0, 1], c[3]),
        ];
        let s = FockState::from_terms(&modes, 2, terms.into_iter().map(|(o, a)| (o, Complex64::new(a, 0.0)))).unwrap();
        let q1 = QubitModes::matched(ModeName::InH, ModeName::InV);
        let q2 = QubitModes::matched(ModeName::AsH, ModeName::AsV);
        assert!((bell_decompose(&s, q1, q2).unwrap().get(which).norm_sqr() - 1.0).abs() < 1e-12);
        s
    }

    #[test]
    fn bell_inputs_are_classified_exactly() {
        for which in BellState::ALL {
            let out = apply_bsm_optics(&bell_input(which), 0.0).unwrap();
            let dist = click_distribution(&out, &BSM_MONITORS, &DetectorModel::ideal()).unwrap();
            let mut by_outcome = [0.0; 3];
            let mut two_clicks = [0.0; 3];
            for (pattern, p) in dist {
                by_outcome[classify_bsm(pattern) as usize] += p;
                if pattern.len() == 2 {
                    two_clicks[classify_bsm(pattern) as usize] += p;
                }
            }
            match which {
                BellState::PsiPlus | BellState::PsiMinus => {
                    let expected = if which == BellState::PsiPlus { 0 } else { 1 };
                    let total: f64 = two_clicks.iter().sum();
                    assert!((two_clicks[expected] / total - 1.0).abs() < 1e-12, "{which:?}: {two_clicks:?}");
                }
                _ => assert!((by_outcome[BsmOutcome::NoResult as usize] - 1.0).abs() < 1e-12),
            }
        }
    }

    #[test]
    fn identical_photons_never_give_psi_minus() {
        use crate::sources::wcp_state;
        for q in [PolarizationQubit::h(), PolarizationQubit::plus(), PolarizationQubit::r()] {
            let two = wcp_state(1, &q, 1.0, 2).unwrap();
            // second photon with the same polarization in the anti-Stokes port
            let other = q.single_photon(AS_H, AS_V, 2).unwrap();
            let s = two.tensor(&other).unwrap();
            let out = apply_bsm_optics(&s, 0.0).unwrap();
            let mut outcome = [0.0; 3];
            for (pattern, p) in click_distribution(&out, &BSM_MONITORS, &DetectorModel::ideal()).unwrap() {
                outcome[classify_bsm(pattern) as usize] += p;
            }
            assert!(outcome[BsmOutcome::PsiMinus as usize] < 1e-12);
            let plus = outcome[BsmOutcome::PsiPlus as usize];
            if q == PolarizationQubit::h() {
                assert!(plus < 1e-12);
            } else {
                assert!((plus - 0.5).abs() < 1e-12, "{plus}");
            }
        }
    }

    #[test]
    fn analyzer_examples() {
        let p = ideal_params();
        let h = PolarizationQubit::h().single_photon(S_H, S_V, 2).unwrap();
        let a = analyzer_distribution(&h, &AnalyzerBasis::HV, &p).unwrap();
        assert!((a.transmitted - 1.0).abs() < 1e-12);
        let plus = PolarizationQubit::plus().single_photon(S_H, S_V, 2).unwrap();
        let a = analyzer_distribution(&plus, &AnalyzerBasis::HV, &p).unwrap();
        assert!((a.transmitted - 0.5).abs() < 1e-12 && (a.reflected - 0.5).abs() < 1e-12);
        let r = PolarizationQubit::r().single_photon(S_H, S_V, 2).unwrap();
        let a = analyzer_distribution(&r, &AnalyzerBasis::RL, &p).unwrap();
        assert!((a.transmitted - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(analyze_polarization(&r, &AnalyzerBasis::RL, &p, &mut rng).unwrap(), ClickPattern::of(&[AT]));
        let none = FockState::vacuum(&[IN_H], 2).unwrap();
        assert_eq!(analyzer_distribution(&none, &AnalyzerBasis::HV, &p), Err(Error::MissingStokesModes));
    }

    #[test]
    fn analyzer_leak_reaches_wrong_port() {
        let p = ExperimentParams { leak_analyzer: 0.01, ..ideal_params() };
        let h = PolarizationQubit::h().single_photon(S_H, S_V, 2).unwrap();
        let a = analyzer_distribution(&h, &AnalyzerBasis::HV, &p).unwrap();
        assert!((a.reflected - 0.01).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn click_probabilities_sum_to_one(
            theta in 0.0f64..3.14, phi in -3.0f64..3.0, n in 0u8..=2,
            eta in 0.0f64..=1.0, dark in 0.0f64..0.1,
        ) {
            use crate::sources::wcp_state;
            let q = PolarizationQubit::from_bloch(theta, phi);
            let s = wcp_state(n, &q, 0.7, 2).unwrap()
                .tensor(&q.orthogonal().single_photon(AS_H, AS_V, 3).unwrap()).unwrap()
                .with_n_max(3).unwrap();
            let out = apply_bsm_optics(&s, 0.003).unwrap();
            let model = DetectorModel { eta, dark };
            let total: f64 = click_distribution(&out, &BSM_MONITORS, &model).unwrap().iter().map(|(_, p)| p).sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
        }
    }
}
